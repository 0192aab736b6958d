#pragma once

#include "mrband/kernels.hpp"
#include "mrband/sample.hpp"
#include "mrband/rng.hpp"
#include "mrband/estimators.hpp"
#include "mrband/bandwidth.hpp"
#include "mrband/bands.hpp"
#include "mrband/simulate.hpp"
#include "mrband/io.hpp"
