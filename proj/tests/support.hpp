#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "corec/parser.hpp"

namespace corec::test {

inline std::string read_file(const std::string& rel) {
  std::ifstream in(std::string(COREC_SOURCE_DIR) + "/" + rel, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + rel);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline Program load(const std::string& rel) { return parse_program(read_file(rel)); }

}  // namespace corec::test
