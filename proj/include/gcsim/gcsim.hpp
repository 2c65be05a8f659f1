#pragma once

#define GCSIM_VERSION "0.1.0"

#include "gcsim/binomial.hpp"
#include "gcsim/correlated.hpp"
#include "gcsim/cost.hpp"
#include "gcsim/errors.hpp"
#include "gcsim/gc.hpp"
#include "gcsim/hypothesis.hpp"
#include "gcsim/log_sum_exp.hpp"
#include "gcsim/model.hpp"
#include "gcsim/parallel.hpp"
#include "gcsim/partition.hpp"
#include "gcsim/rng.hpp"
