#pragma once

#include "ndfo/harness/accuracy.hpp"
#include "ndfo/harness/config.hpp"
#include "ndfo/harness/csv.hpp"
#include "ndfo/harness/optimization.hpp"
#include "ndfo/harness/verify.hpp"
