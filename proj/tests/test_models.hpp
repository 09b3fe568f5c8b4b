/*
 * Copyright 2026 The epiflux Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Shared model configurations for the test suite.

#ifndef EPIFLUX_TESTS_TEST_MODELS_HPP
#define EPIFLUX_TESTS_TEST_MODELS_HPP

#include <string>

#include "epiflux/config.hpp"
#include "epiflux/lln.hpp"
#include "epiflux/model.hpp"

namespace testmodels {

// lambda = 0.5, gamma = 1, one trait: F is pinned at lambda_star
inline const char* kModelA = R"(
[lambda]
family = constant
value = 0.5
[gamma]
family = constant
value = 1
[initial]
age_family = exponential
rate = 1
[bounds]
lambda_star = 0.5
)";

// infectious below age 1, immune until age 2
inline const char* kModelB = R"(
[lambda]
family = window
value = 2
cutoff = 1
[gamma]
family = delay
value = 1
threshold = 2
[initial]
age_family = exponential
rate = 1
[bounds]
lambda_star = 2
)";

inline const char* kModelB2 = R"(
[traits]
labels = a b
weights = 0.5 0.5
[lambda]
family = window
value = 2
cutoff = 1
[gamma]
family = delay
value = 1
threshold = 2
[kernel]
matrix = 1.6 0.4; 0.6 1.4
[initial]
age_family = exponential
rate = 1
[bounds]
lambda_star = 2
)";

// two traits that actually differ, for trait-sensitive checks
inline const char* kModelC = R"(
[traits]
labels = lo hi
weights = 0.5 0.5
[lambda]
family = window
value = 2
cutoff = 1
[lambda:hi]
family = exp_decay
value = 1.5
rate = 1
[gamma]
family = delay
value = 1
threshold = 1.5
[gamma:lo]
family = sigmoid
value = 0.8
midpoint = 2
slope = 4
[kernel]
matrix = 1.6 0.4; 0.6 1.4
[initial]
age_family = gamma
shape = 2
scale = 0.7
trait_probs = 0.3 0.7
[bounds]
lambda_star = 2
)";

inline const char* kGammaZero = R"(
[lambda]
family = window
value = 2
cutoff = 1
[gamma]
family = constant
value = 0
[initial]
age_family = exponential
rate = 1
[bounds]
lambda_star = 2
)";

inline epiflux::ModelSpec model(const char* text) {
  return epiflux::build_model(epiflux::Config::from_string(text));
}

inline epiflux::LlnSolution lln(const epiflux::ModelSpec& m, double horizon = 8.0,
                                double dt = 0.05) {
  epiflux::LlnOptions o;
  o.horizon = horizon;
  o.dt = dt;
  return epiflux::solve_lln(m, o);
}

}  // namespace testmodels

#endif  // EPIFLUX_TESTS_TEST_MODELS_HPP
