#pragma once

#include "acp/error.hpp"
#include "acp/rational.hpp"
#include "acp/histogram.hpp"
#include "acp/core_model.hpp"
#include "acp/io.hpp"
#include "acp/symmetry.hpp"
#include "acp/colour_passing.hpp"
#include "acp/pfg_construction.hpp"
#include "acp/bench.hpp"
#include "acp/inference.hpp"
