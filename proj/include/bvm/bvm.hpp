#pragma once

#include "bvm/distributions.hpp"
#include "bvm/errors.hpp"
#include "bvm/experiment.hpp"
#include "bvm/io.hpp"
#include "bvm/matching.hpp"
#include "bvm/optimizer.hpp"
#include "bvm/rng.hpp"
#include "bvm/sample_complexity.hpp"
#include "bvm/strategies.hpp"
#include "bvm/voting.hpp"
#include "bvm/welfare.hpp"
