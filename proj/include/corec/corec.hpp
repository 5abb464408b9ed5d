#pragma once

// Umbrella header.

#include "corec/ast.hpp"
#include "corec/cli.hpp"
#include "corec/diagnostics.hpp"
#include "corec/emit.hpp"
#include "corec/eval.hpp"
#include "corec/guardedness.hpp"
#include "corec/parser.hpp"
#include "corec/pretty.hpp"
#include "corec/report.hpp"
#include "corec/transform.hpp"
