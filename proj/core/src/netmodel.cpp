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

#include "cfmimo/netmodel.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "cfmimo/common.hpp"

namespace cfmimo {

double three_slope_reference_loss_db(double freq_mhz, double ap_height_m, double ue_height_m)
{
    if (freq_mhz <= 0.0 || ap_height_m <= 0.0 || ue_height_m <= 0.0)
        throw std::invalid_argument("three_slope_reference_loss_db: arguments must be positive");
    double lf = std::log10(freq_mhz);
    return 46.3 + 33.9 * lf - 13.82 * std::log10(ap_height_m) - (1.1 * lf - 0.7) * ue_height_m +
           (1.56 * lf - 0.8);
}

void PathlossParams::validate() const
{
    if (!(d0_m > 0.0))
        throw std::invalid_argument("pathloss.d0_m must be positive");
    if (!(d1_m > d0_m))
        throw std::invalid_argument("pathloss.d1_m must exceed d0_m");
    if (shadow_std_db < 0.0)
        throw std::invalid_argument("pathloss.shadow_std_db must be nonnegative");
    if (!(min_dist_m > 0.0))
        throw std::invalid_argument("pathloss.min_dist_m must be positive");
}

double three_slope_pathloss_db(double dist_m, const PathlossParams &params)
{
    // The empirical slopes are expressed over distance in km.
    double d_km = std::max(dist_m, params.min_dist_m) / 1000.0;
    double d0_km = params.d0_m / 1000.0;
    double d1_km = params.d1_m / 1000.0;

    if (d_km > d1_km)
        return -params.ref_loss_db - 35.0 * std::log10(d_km);
    if (d_km > d0_km)
        return -params.ref_loss_db - 15.0 * std::log10(d1_km) - 20.0 * std::log10(d_km);
    return -params.ref_loss_db - 15.0 * std::log10(d1_km) - 20.0 * std::log10(d0_km);
}

double three_slope_beta(double dist_m, const PathlossParams &params)
{
    return db_to_linear(three_slope_pathloss_db(dist_m, params));
}

namespace {

arma::cx_vec steering_vector(std::size_t n_antennas, double angle_rad)
{
    arma::cx_vec a(n_antennas);
    for (std::size_t m = 0; m < n_antennas; ++m)
    {
        double phase = std::numbers::pi * double(m) * std::sin(angle_rad);
        a(m) = std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return a;
}

// E{ exp(j*pi*d*sin(angle + delta)) } over delta ~ N(0, std^2), by composite
// Simpson quadrature over +-6 std. The weights are normalized by the same
// quadrature of the Gaussian pdf so that the d = 0 moment is exactly one.
arma::cx_vec scattering_moments(std::size_t n_antennas, double angle_rad, double std_rad)
{
    constexpr std::size_t nodes = 513; // odd, so Simpson applies
    const double span = 6.0 * std_rad;
    const double step = 2.0 * span / double(nodes - 1);

    arma::vec weights(nodes);
    for (std::size_t i = 0; i < nodes; ++i)
    {
        double simpson = (i == 0 || i == nodes - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        double delta = -span + double(i) * step;
        weights(i) = simpson * std::exp(-0.5 * delta * delta / (std_rad * std_rad));
    }
    weights /= arma::accu(weights);

    arma::cx_vec moments(n_antennas, arma::fill::zeros);
    for (std::size_t i = 0; i < nodes; ++i)
    {
        double s = std::sin(angle_rad + (-span + double(i) * step));
        for (std::size_t d = 0; d < n_antennas; ++d)
        {
            double phase = std::numbers::pi * double(d) * s;
            moments(d) += weights(i) * std::complex<double>(std::cos(phase), std::sin(phase));
        }
    }
    return moments;
}

arma::cx_mat psd_project(const arma::cx_mat &m, double target_trace)
{
    arma::vec eigval;
    arma::cx_mat eigvec;
    if (!arma::eig_sym(eigval, eigvec, m))
        throw std::runtime_error("correlation_matrix: eigendecomposition failed");
    eigval.transform([](double v) { return v < 0.0 ? 0.0 : v; });

    arma::cx_mat out = eigvec * arma::diagmat(eigval) * eigvec.t();
    double tr = arma::trace(arma::real(out));
    if (!(tr > 0.0))
        throw std::runtime_error("correlation_matrix: projected matrix has nonpositive trace");
    out *= target_trace / tr;

    // The clip plus rescale must leave a valid covariance behind.
    arma::vec check;
    if (!arma::eig_sym(check, out) || check.min() < -1e-12 * target_trace)
        throw std::runtime_error("correlation_matrix: PSD projection failed");
    return out;
}

} // namespace

arma::cx_mat correlation_matrix(double beta, std::size_t n_antennas, const CorrelationModel &model,
                                double nominal_angle_rad)
{
    if (!(beta > 0.0))
        throw std::invalid_argument("correlation_matrix: beta must be positive");
    if (n_antennas == 0)
        throw std::invalid_argument("correlation_matrix: need at least one antenna");

    if (model.kind == CorrelationKind::ScaledIdentity)
        return beta * arma::cx_mat(arma::eye<arma::mat>(n_antennas, n_antennas),
                                   arma::zeros<arma::mat>(n_antennas, n_antennas));

    if (model.angular_std_rad < 0.0)
        throw std::invalid_argument("correlation_matrix: angular_std_rad must be nonnegative");

    if (model.angular_std_rad == 0.0)
    {
        arma::cx_vec a = steering_vector(n_antennas, nominal_angle_rad);
        return beta * (a * a.t());
    }

    // Hermitian Toeplitz from the antenna-difference moments.
    arma::cx_vec moments =
        scattering_moments(n_antennas, nominal_angle_rad, model.angular_std_rad);
    arma::cx_mat r(n_antennas, n_antennas);
    for (std::size_t row = 0; row < n_antennas; ++row)
        for (std::size_t col = 0; col < n_antennas; ++col)
        {
            std::complex<double> m = moments(std::size_t(std::llabs(std::int64_t(row) - std::int64_t(col))));
            r(row, col) = row >= col ? m : std::conj(m);
        }

    return psd_project(beta * r, beta * double(n_antennas));
}

void SceneConfig::validate() const
{
    if (L == 0)
        throw std::invalid_argument("scene.L must be at least 1");
    if (K == 0)
        throw std::invalid_argument("scene.K must be at least 1");
    if (N == 0)
        throw std::invalid_argument("scene.N must be at least 1");
    if (!(side_m > 0.0))
        throw std::invalid_argument("scene.side_m must be positive");
    pathloss.validate();
    if (correlation.kind == CorrelationKind::LocalScattering && correlation.angular_std_rad < 0.0)
        throw std::invalid_argument("scene.correlation.angular_std_deg must be nonnegative");
}

namespace {

double plane_distance(const arma::rowvec &a, const arma::rowvec &b, double side, bool wrap)
{
    double dx = std::abs(a(0) - b(0));
    double dy = std::abs(a(1) - b(1));
    if (wrap)
    {
        dx = std::min(dx, side - dx);
        dy = std::min(dy, side - dy);
    }
    return std::hypot(dx, dy);
}

} // namespace

NetworkScene generate_scene(const SceneConfig &cfg, RngStream &rng)
{
    cfg.validate();

    NetworkScene scene;
    scene.cfg = cfg;
    scene.ap_pos.set_size(cfg.L, 2);
    scene.ue_pos.set_size(cfg.K, 2);

    for (std::size_t l = 0; l < cfg.L; ++l)
        for (std::size_t c = 0; c < 2; ++c)
            scene.ap_pos(l, c) = rng.uniform(0.0, cfg.side_m);
    for (std::size_t k = 0; k < cfg.K; ++k)
        for (std::size_t c = 0; c < 2; ++c)
            scene.ue_pos(k, c) = rng.uniform(0.0, cfg.side_m);

    scene.dist.set_size(cfg.L, cfg.K);
    scene.beta.set_size(cfg.L, cfg.K);
    for (std::size_t l = 0; l < cfg.L; ++l)
        for (std::size_t k = 0; k < cfg.K; ++k)
        {
            double d = plane_distance(scene.ap_pos.row(l), scene.ue_pos.row(k), cfg.side_m,
                                      cfg.wrap_around);
            scene.dist(l, k) = std::max(d, cfg.pathloss.min_dist_m);
            scene.beta(l, k) = three_slope_beta(scene.dist(l, k), cfg.pathloss);
        }

    if (cfg.pathloss.shadow_std_db > 0.0)
    {
        // log-normal shadow fading, sampled per link in fixed (l, k) order
        for (std::size_t l = 0; l < cfg.L; ++l)
            for (std::size_t k = 0; k < cfg.K; ++k)
                scene.beta(l, k) *= db_to_linear(rng.normal(cfg.pathloss.shadow_std_db));
    }

    scene.delta_t = delay_offsets(scene.dist);

    scene.R.resize(cfg.K * cfg.L);
    for (std::size_t k = 0; k < cfg.K; ++k)
        for (std::size_t l = 0; l < cfg.L; ++l)
        {
            double angle = std::atan2(scene.ue_pos(k, 1) - scene.ap_pos(l, 1),
                                      scene.ue_pos(k, 0) - scene.ap_pos(l, 0));
            scene.R[k * cfg.L + l] =
                correlation_matrix(scene.beta(l, k), cfg.N, cfg.correlation, angle);
        }

    return scene;
}

arma::mat delay_offsets(const arma::mat &dist_m)
{
    arma::mat offsets(dist_m.n_rows, dist_m.n_cols);
    for (std::size_t k = 0; k < dist_m.n_cols; ++k)
    {
        double nearest = dist_m.col(k).min();
        for (std::size_t l = 0; l < dist_m.n_rows; ++l)
            offsets(l, k) = (dist_m(l, k) - nearest) / speed_of_light;
    }
    return offsets;
}

namespace {

nlohmann::json mat_to_json(const arma::mat &m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.n_rows; ++r)
    {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < m.n_cols; ++c)
            row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

arma::mat mat_from_json(const nlohmann::json &j)
{
    std::size_t n_rows = j.size();
    std::size_t n_cols = n_rows == 0 ? 0 : j.at(0).size();
    arma::mat m(n_rows, n_cols);
    for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t c = 0; c < n_cols; ++c)
            m(r, c) = j.at(r).at(c).get<double>();
    return m;
}

nlohmann::json cx_mat_to_json(const arma::cx_mat &m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.n_rows; ++r)
    {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < m.n_cols; ++c)
            row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

arma::cx_mat cx_mat_from_json(const nlohmann::json &j)
{
    std::size_t n_rows = j.size();
    std::size_t n_cols = n_rows == 0 ? 0 : j.at(0).size();
    arma::cx_mat m(n_rows, n_cols);
    for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t c = 0; c < n_cols; ++c)
            m(r, c) = {j.at(r).at(c).at(0).get<double>(), j.at(r).at(c).at(1).get<double>()};
    return m;
}

} // namespace

std::string scene_to_json(const NetworkScene &scene)
{
    nlohmann::json j;
    j["L"] = scene.cfg.L;
    j["K"] = scene.cfg.K;
    j["N"] = scene.cfg.N;
    j["side_m"] = scene.cfg.side_m;
    j["wrap_around"] = scene.cfg.wrap_around;
    j["pathloss"] = {{"d0_m", scene.cfg.pathloss.d0_m},
                     {"d1_m", scene.cfg.pathloss.d1_m},
                     {"ref_loss_db", scene.cfg.pathloss.ref_loss_db},
                     {"shadow_std_db", scene.cfg.pathloss.shadow_std_db},
                     {"min_dist_m", scene.cfg.pathloss.min_dist_m}};
    j["correlation"] = {
        {"model", scene.cfg.correlation.kind == CorrelationKind::ScaledIdentity
                      ? "scaled-identity"
                      : "local-scattering"},
        {"angular_std_rad", scene.cfg.correlation.angular_std_rad}};
    j["ap_pos"] = mat_to_json(scene.ap_pos);
    j["ue_pos"] = mat_to_json(scene.ue_pos);
    j["dist"] = mat_to_json(scene.dist);
    j["beta"] = mat_to_json(scene.beta);
    j["delta_t"] = mat_to_json(scene.delta_t);
    nlohmann::json rs = nlohmann::json::array();
    for (const auto &r : scene.R)
        rs.push_back(cx_mat_to_json(r));
    j["R"] = std::move(rs);
    return j.dump(2);
}

NetworkScene scene_from_json(const std::string &text)
{
    nlohmann::json j = nlohmann::json::parse(text);

    NetworkScene scene;
    scene.cfg.L = j.at("L").get<std::size_t>();
    scene.cfg.K = j.at("K").get<std::size_t>();
    scene.cfg.N = j.at("N").get<std::size_t>();
    scene.cfg.side_m = j.at("side_m").get<double>();
    scene.cfg.wrap_around = j.at("wrap_around").get<bool>();
    const auto &pl = j.at("pathloss");
    scene.cfg.pathloss.d0_m = pl.at("d0_m").get<double>();
    scene.cfg.pathloss.d1_m = pl.at("d1_m").get<double>();
    scene.cfg.pathloss.ref_loss_db = pl.at("ref_loss_db").get<double>();
    scene.cfg.pathloss.shadow_std_db = pl.at("shadow_std_db").get<double>();
    scene.cfg.pathloss.min_dist_m = pl.at("min_dist_m").get<double>();
    const auto &co = j.at("correlation");
    scene.cfg.correlation.kind = co.at("model").get<std::string>() == "scaled-identity"
                                     ? CorrelationKind::ScaledIdentity
                                     : CorrelationKind::LocalScattering;
    scene.cfg.correlation.angular_std_rad = co.at("angular_std_rad").get<double>();
    scene.ap_pos = mat_from_json(j.at("ap_pos"));
    scene.ue_pos = mat_from_json(j.at("ue_pos"));
    scene.dist = mat_from_json(j.at("dist"));
    scene.beta = mat_from_json(j.at("beta"));
    scene.delta_t = mat_from_json(j.at("delta_t"));
    for (const auto &r : j.at("R"))
        scene.R.push_back(cx_mat_from_json(r));
    return scene;
}

} // namespace cfmimo
