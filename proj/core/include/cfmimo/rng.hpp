// SPDX-License-Identifier: Apache-2.0
//
// cfmimo - cell-free massive MIMO downlink simulator with asynchronous reception
// Copyright (C) 2026 cfmimo contributors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file
// except in compliance with the License. You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0.
//
// Unless required by applicable law or agreed to in writing, software distributed under the
// License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND,
// either express or implied. See the License for the specific language governing permissions
// and limitations under the License.
// ------------------------------------------------------------------------

#ifndef CFMIMO_RNG_HPP
#define CFMIMO_RNG_HPP

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

#include <armadillo>

namespace cfmimo {

// Deterministic random stream with counter-based substream derivation.
// Substreams are derived by mixing a master seed with a path of integer
// ids (experiment tag, scene index, trial index, ...), so any unit of work
// can be reproduced in isolation and results do not depend on scheduling.
//
// Gaussian variates use an explicit Box-Muller transform instead of
// std::normal_distribution, whose algorithm is implementation-defined;
// this keeps outputs bit-stable across standard libraries.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed);

    static RngStream derive(std::uint64_t master, std::initializer_list<std::uint64_t> path);

    std::uint64_t next_u64();

    // uniform on [0, 1)
    double uniform();
    double uniform(double low, double high);

    // standard normal N(0, 1)
    double normal();
    double normal(double stddev);

    // circularly symmetric complex normal CN(0, 1)
    std::complex<double> cnormal();
    arma::cx_vec cnormal_vec(std::size_t n);

  private:
    std::mt19937_64 engine;
    double spare = 0.0;
    bool has_spare = false;
};

} // namespace cfmimo

#endif
