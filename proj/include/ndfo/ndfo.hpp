#pragma once

#include "ndfo/bounds.hpp"
#include "ndfo/core.hpp"
#include "ndfo/directions.hpp"
#include "ndfo/estimators.hpp"
#include "ndfo/optimizer.hpp"
#include "ndfo/testfns.hpp"
