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

#include "cfmimo/common.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace cfmimo {

double db_to_linear(double value_db) { return std::pow(10.0, value_db / 10.0); }

double linear_to_db(double value_linear) { return 10.0 * std::log10(value_linear); }

double dbm_to_watt(double value_dbm) { return db_to_linear(value_dbm - 30.0); }

double watt_to_dbm(double value_watt) { return linear_to_db(value_watt) + 30.0; }

std::string format_double(double value)
{
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double percentile(std::vector<double> values, double q)
{
    if (values.empty())
        throw std::invalid_argument("percentile: empty input");
    if (q < 0.0 || q > 1.0)
        throw std::invalid_argument("percentile: q must be in [0, 1]");

    std::sort(values.begin(), values.end());
    double pos = q * double(values.size() - 1);
    std::size_t lo = std::size_t(pos);
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - double(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::uint64_t fnv1a(const void *data, std::size_t size, std::uint64_t seed)
{
    const auto *bytes = static_cast<const unsigned char *>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i)
    {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

void HashSink::add(double value)
{
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    add(bits);
}

void HashSink::add(std::uint64_t value)
{
    unsigned char bytes[8];
    std::memcpy(bytes, &value, sizeof(bytes));
    state = fnv1a(bytes, sizeof(bytes), state);
}

void HashSink::add(std::string_view text) { state = fnv1a(text.data(), text.size(), state); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)> &fn)
{
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t workers = std::min<std::size_t>(hw == 0 ? 1 : hw, count);
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;)
        {
            std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try
            {
                fn(i);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back(worker);
    for (auto &t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace cfmimo
