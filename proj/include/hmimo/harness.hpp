// SPDX-License-Identifier: Apache-2.0
//
// hmimo: energy-efficient MIMO links assisted by nearly-passive metasurfaces
// Copyright (C) 2026 hmimo contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HMIMO_HARNESS_HPP
#define HMIMO_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hmimo/channel.hpp"
#include "hmimo/common.hpp"
#include "hmimo/convex.hpp"
#include "hmimo/multi_stream.hpp"
#include "hmimo/oracle.hpp"
#include "hmimo/power.hpp"
#include "hmimo/single_stream.hpp"
#include "hmimo/siso.hpp"

namespace hmimo {

// Monte-Carlo sweep harness: scenario ingestion, architecture dispatch, and
// CSV/JSON emission.  Sweeps run over the radiated-power budget or the
// per-chain static power, comparing the surface-assisted link against a
// conventional all-digital array of the same aperture class.

inline constexpr const char* kVersionString = "1.0.0";

enum class Architecture { Siso, SingleStream, MultiStream, DigitalOnly };
enum class SweepVariable { PMaxDbm, PerChainStaticDbm };

/// Transmission rank of the all-digital baseline.  Single-stream carries one
/// data stream on the strongest eigenmode (array gain only), matching the
/// regime where the surface link is also limited to one stream; multi-stream
/// water-fills across all eigenmodes.
enum class DigitalStreams { Single, Multi };

inline std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::Siso: return "siso";
    case Architecture::SingleStream: return "single_stream";
    case Architecture::MultiStream: return "multi_stream";
    case Architecture::DigitalOnly: return "digital_only";
  }
  return "siso";
}

inline Architecture parse_architecture(const std::string& s) {
  if (s == "siso") return Architecture::Siso;
  if (s == "single_stream") return Architecture::SingleStream;
  if (s == "multi_stream") return Architecture::MultiStream;
  if (s == "digital_only") return Architecture::DigitalOnly;
  throw model_error("unknown architecture '" + s +
                    "' (expected siso, single_stream, multi_stream or "
                    "digital_only)");
}

inline std::string to_string(SweepVariable v) {
  return v == SweepVariable::PMaxDbm ? "P_max_dbm" : "per_chain_static_dbm";
}

inline SweepVariable parse_sweep_variable(const std::string& s) {
  if (s == "P_max_dbm") return SweepVariable::PMaxDbm;
  if (s == "per_chain_static_dbm") return SweepVariable::PerChainStaticDbm;
  throw model_error("unknown sweep variable '" + s +
                    "' (expected P_max_dbm or per_chain_static_dbm)");
}

inline std::string to_string(OptimizeMode m) {
  return m == OptimizeMode::Capacity ? "capacity" : "ee";
}

inline OptimizeMode parse_mode(const std::string& s) {
  if (s == "ee") return OptimizeMode::EnergyEfficiency;
  if (s == "capacity") return OptimizeMode::Capacity;
  throw model_error("unknown mode '" + s + "' (expected ee or capacity)");
}

inline std::string to_string(DigitalStreams s) {
  return s == DigitalStreams::Single ? "single" : "multi";
}

inline DigitalStreams parse_digital_streams(const std::string& s) {
  if (s == "single") return DigitalStreams::Single;
  if (s == "multi") return DigitalStreams::Multi;
  throw model_error("unknown digital_streams '" + s +
                    "' (expected single or multi)");
}

/// Everything needed to reproduce one sweep: the link scenario, the solver
/// tier, the figure axis and the Monte-Carlo size.  All static powers are
/// stored in watts once parsed; the sweep axis itself is in dBm.
struct ExperimentConfig {
  ScenarioParams scenario;
  Architecture architecture = Architecture::Siso;
  DigitalStreams digital_streams = DigitalStreams::Multi;
  OptimizeMode mode = OptimizeMode::EnergyEfficiency;
  SweepVariable sweep_variable = SweepVariable::PMaxDbm;
  std::vector<double> sweep_values;  // dBm, sorted
  int monte_carlo_draws = 100;
  PowerModel power;
  double p_max_dbm = 20.0;  // radiated budget when it is not the sweep axis
  SolverOptions solver;
  double draw_time_cap_s = 300.0;  // cooperative per-draw cap; <= 0 disables
  int threads = 1;
  std::string output_path = "sweep.csv";
};

inline void validate(const ExperimentConfig& cfg) {
  if (!std::is_sorted(cfg.sweep_values.begin(), cfg.sweep_values.end()))
    throw model_error("sweep values must be sorted ascending");
  for (double v : cfg.sweep_values)
    if (!std::isfinite(v)) throw model_error("sweep values must be finite");
  if (cfg.monte_carlo_draws < 1)
    throw model_error("monte_carlo_draws must be at least 1");
  if (cfg.architecture == Architecture::Siso &&
      (cfg.scenario.n_tx != 1 || cfg.scenario.n_rx != 1))
    throw model_error("siso architecture requires n_tx = n_rx = 1");
  if (cfg.architecture != Architecture::DigitalOnly &&
      cfg.scenario.m_tx > cfg.scenario.m_rx)
    throw model_error(
        "surface architectures require m_tx <= m_rx (the inter-surface "
        "channel must admit a left inverse)");
}

// ---------------------------------------------------------------------------
// JSON bindings (value-or-default: omitted keys keep the field defaults).
// ---------------------------------------------------------------------------

inline void from_json(const nlohmann::json& j, ScenarioParams& s) {
  s.carrier_freq_hz = j.value("carrier_freq_hz", s.carrier_freq_hz);
  s.bandwidth_hz = j.value("bandwidth_hz", s.bandwidth_hz);
  s.n_tx = j.value("n_tx", s.n_tx);
  s.n_rx = j.value("n_rx", s.n_rx);
  s.m_tx = j.value("m_tx", s.m_tx);
  s.m_rx = j.value("m_rx", s.m_rx);
  s.element_spacing_wavelengths =
      j.value("element_spacing_wavelengths", s.element_spacing_wavelengths);
  s.array_surface_gap_m = j.value("array_surface_gap_m", s.array_surface_gap_m);
  s.surface_separation_m =
      j.value("surface_separation_m", s.surface_separation_m);
  s.rice_k = j.value("rice_k", s.rice_k);
  s.pathloss_exponent = j.value("pathloss_exponent", s.pathloss_exponent);
  s.ref_distance_m = j.value("ref_distance_m", s.ref_distance_m);
  s.pathloss_ref = j.value("pathloss_ref", s.pathloss_ref);
  s.noise_psd_dbm_hz = j.value("noise_psd_dbm_hz", s.noise_psd_dbm_hz);
  s.noise_figure_db = j.value("noise_figure_db", s.noise_figure_db);
  s.directivity = j.value("directivity", s.directivity);
  s.seed = j.value("seed", s.seed);
}

inline void to_json(nlohmann::json& j, const ScenarioParams& s) {
  j = nlohmann::json{{"carrier_freq_hz", s.carrier_freq_hz},
                     {"bandwidth_hz", s.bandwidth_hz},
                     {"n_tx", s.n_tx},
                     {"n_rx", s.n_rx},
                     {"m_tx", s.m_tx},
                     {"m_rx", s.m_rx},
                     {"element_spacing_wavelengths", s.element_spacing_wavelengths},
                     {"array_surface_gap_m", s.array_surface_gap_m},
                     {"surface_separation_m", s.surface_separation_m},
                     {"rice_k", s.rice_k},
                     {"pathloss_exponent", s.pathloss_exponent},
                     {"ref_distance_m", s.ref_distance_m},
                     {"pathloss_ref", s.pathloss_ref},
                     {"noise_psd_dbm_hz", s.noise_psd_dbm_hz},
                     {"noise_figure_db", s.noise_figure_db},
                     {"directivity", s.directivity},
                     {"seed", s.seed}};
}

/// Static powers accept either watt keys ("per_chain_static_w") or the dBm
/// convenience forms used in link budgets ("per_chain_static_dbm").
inline void from_json(const nlohmann::json& j, PowerModel& p) {
  const auto power_field = [&](const char* base, double current) {
    const std::string w = std::string(base) + "_w";
    const std::string dbm = std::string(base) + "_dbm";
    if (j.contains(w)) return j.at(w).get<double>();
    if (j.contains(dbm)) return dbm_to_watts(j.at(dbm).get<double>());
    return current;
  };
  p.mu = j.value("mu", p.mu);
  // Shared keys ("per_chain_static_*") set both sides; side-specific keys
  // override them.
  p.per_element_static_tx =
      power_field("per_element_static", p.per_element_static_tx);
  p.per_element_static_rx =
      power_field("per_element_static", p.per_element_static_rx);
  p.per_element_static_tx =
      power_field("per_element_static_tx", p.per_element_static_tx);
  p.per_element_static_rx =
      power_field("per_element_static_rx", p.per_element_static_rx);
  p.per_chain_static_tx =
      power_field("per_chain_static", p.per_chain_static_tx);
  p.per_chain_static_rx =
      power_field("per_chain_static", p.per_chain_static_rx);
  p.per_chain_static_tx =
      power_field("per_chain_static_tx", p.per_chain_static_tx);
  p.per_chain_static_rx =
      power_field("per_chain_static_rx", p.per_chain_static_rx);
  p.surface_overhead = power_field("surface_overhead", p.surface_overhead);
  p.system_overhead = power_field("system_overhead", p.system_overhead);
}

inline void to_json(nlohmann::json& j, const PowerModel& p) {
  j = nlohmann::json{{"mu", p.mu},
                     {"per_element_static_tx_w", p.per_element_static_tx},
                     {"per_element_static_rx_w", p.per_element_static_rx},
                     {"per_chain_static_tx_w", p.per_chain_static_tx},
                     {"per_chain_static_rx_w", p.per_chain_static_rx},
                     {"surface_overhead_w", p.surface_overhead},
                     {"system_overhead_w", p.system_overhead}};
}

inline void from_json(const nlohmann::json& j, SolverOptions& o) {
  o.max_iters = j.value("max_iters", o.max_iters);
  o.obj_tol = j.value("obj_tol", o.obj_tol);
  o.feas_tol = j.value("feas_tol", o.feas_tol);
  o.barrier_mu = j.value("barrier_mu", o.barrier_mu);
  o.inner_tol = j.value("inner_tol", o.inner_tol);
  o.barrier_gap = j.value("barrier_gap", o.barrier_gap);
  o.rel_obj_change = j.value("rel_obj_change", o.rel_obj_change);
  o.time_cap_s = j.value("time_cap_s", o.time_cap_s);
}

inline void to_json(nlohmann::json& j, const SolverOptions& o) {
  j = nlohmann::json{{"max_iters", o.max_iters},
                     {"obj_tol", o.obj_tol},
                     {"feas_tol", o.feas_tol},
                     {"barrier_mu", o.barrier_mu},
                     {"inner_tol", o.inner_tol},
                     {"barrier_gap", o.barrier_gap},
                     {"rel_obj_change", o.rel_obj_change},
                     {"time_cap_s", o.time_cap_s}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  if (j.contains("scenario")) j.at("scenario").get_to(c.scenario);
  if (j.contains("architecture"))
    c.architecture = parse_architecture(j.at("architecture").get<std::string>());
  if (j.contains("digital_streams"))
    c.digital_streams =
        parse_digital_streams(j.at("digital_streams").get<std::string>());
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("sweep")) {
    const auto& sw = j.at("sweep");
    if (sw.contains("variable"))
      c.sweep_variable = parse_sweep_variable(sw.at("variable").get<std::string>());
    if (sw.contains("values"))
      c.sweep_values = sw.at("values").get<std::vector<double>>();
  }
  c.monte_carlo_draws = j.value("monte_carlo_draws", c.monte_carlo_draws);
  if (j.contains("power")) j.at("power").get_to(c.power);
  c.p_max_dbm = j.value("p_max_dbm", c.p_max_dbm);
  if (j.contains("solver")) j.at("solver").get_to(c.solver);
  c.draw_time_cap_s = j.value("draw_time_cap_s", c.draw_time_cap_s);
  c.threads = j.value("threads", c.threads);
  c.output_path = j.value("output_path", c.output_path);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{
      {"scenario", c.scenario},
      {"architecture", to_string(c.architecture)},
      {"digital_streams", to_string(c.digital_streams)},
      {"mode", to_string(c.mode)},
      {"sweep",
       nlohmann::json{{"variable", to_string(c.sweep_variable)},
                      {"values", c.sweep_values}}},
      {"monte_carlo_draws", c.monte_carlo_draws},
      {"power", c.power},
      {"p_max_dbm", c.p_max_dbm},
      {"solver", c.solver},
      {"draw_time_cap_s", c.draw_time_cap_s},
      {"threads", c.threads},
      {"output_path", c.output_path}};
}

// ---------------------------------------------------------------------------
// All-digital baseline
// ---------------------------------------------------------------------------

/// Direct channel between the two digital arrays with the surfaces absent:
/// Rician with the scenario's K factor and the scenario's path-loss law
/// evaluated at the array separation.  Keyed by (seed, draw) like the
/// inter-surface block, so sweeps reuse the same fading per draw.
inline MatrixXcd synthesize_direct_channel(const LinkScenario& s,
                                           std::uint64_t draw_index = 0) {
  const double lambda = s.wavelength();
  const double d = (s.rx_array.center() - s.tx_array.center()).norm();
  const double pl0 = s.pathloss_ref > 0.0
                         ? s.pathloss_ref
                         : free_space_pathloss(lambda, s.ref_distance_m);
  const double pl = path_loss(d, pl0, s.ref_distance_m, s.pathloss_exponent);
  RandomStream rng(s.seed, "digital_direct", draw_index);
  return synthesize_far_field(s.rx_array.count(), s.tx_array.count(), s.rice_k,
                              pl, -2.0 * kPi * d / lambda, rng);
}

struct DigitalOnlySolution {
  VectorXd powers;  // per-eigenmode radiated power (W)
  double capacity_bps = 0.0;
  double total_power_w = 0.0;
  double ee_bits_per_joule = 0.0;
  SolveReport report;
};

/// Exact transmit design for the all-digital link.  Multi-stream capacity is
/// water-filling over the direct channel's eigenmodes, and multi-stream
/// efficiency is a Dinkelbach iteration whose inner step has a closed form:
/// below the budget the level is set by the efficiency price, at the budget
/// it reduces to full-power water-filling.  Single-stream transmission beams
/// onto the strongest eigenmode only, so the power problem collapses to the
/// scalar stationary-power solve.
inline DigitalOnlySolution solve_digital_only(
    const MatrixXcd& h_direct, double sigma2, const PowerModel& pm,
    double p_max, OptimizeMode mode = OptimizeMode::EnergyEfficiency,
    DigitalStreams streams = DigitalStreams::Multi, double bandwidth_hz = 1.0,
    const SolverOptions& opts = {}) {
  detail::check_positive(p_max, "power budget");
  detail::check_positive(bandwidth_hz, "bandwidth");
  detail::check_positive(sigma2, "noise power");

  // No surfaces: their per-element and control powers vanish.
  PowerModel pm_d = pm;
  pm_d.surface_overhead = 0.0;
  const double p_c =
      static_power(pm_d, h_direct.cols(), h_direct.rows(), 0, 0);

  const MatrixXcd gram = h_direct.adjoint() * h_direct / sigma2;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(
      MatrixXcd(0.5 * (gram + gram.adjoint())));
  const VectorXd gains = es.eigenvalues().cwiseMax(0.0);

  const auto capacity_bits = [&](const VectorXd& p) {
    double c = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
      c += std::log2(1.0 + gains[i] * p[i]);
    return c;
  };

  DigitalOnlySolution sol;
  if (streams == DigitalStreams::Single) {
    Eigen::Index top = 0;
    const double a = gains.size() > 0 ? gains.maxCoeff(&top) : 0.0;
    sol.powers = VectorXd::Zero(gains.size());
    if (a > 0.0)
      sol.powers[top] = (mode == OptimizeMode::Capacity || pm_d.mu == 0.0)
                            ? p_max
                            : optimize_power_siso(a, pm_d.mu, p_c, p_max);
    sol.report.iterations = 1;
    sol.report.termination = Termination::Converged;
    sol.capacity_bps = bandwidth_hz * capacity_bits(sol.powers);
    sol.total_power_w = pm_d.mu * sol.powers.sum() + p_c;
    sol.ee_bits_per_joule =
        energy_efficiency(sol.capacity_bps, sol.total_power_w);
    return sol;
  }

  const oracle::WaterFillingResult full = oracle::water_filling(gram, p_max);
  if (mode == OptimizeMode::Capacity || pm_d.mu == 0.0) {
    sol.powers = full.powers;
    sol.report.iterations = 1;
    sol.report.termination = Termination::Converged;
  } else {
    // max  B * sum log2(1 + g_i p_i)  /  (mu * sum p_i + P_c)
    FractionalProblem<VectorXd> fp;
    fp.numerator = [&](const VectorXd& p) {
      return bandwidth_hz * capacity_bits(p);
    };
    fp.denominator = [&](const VectorXd& p) {
      return pm_d.mu * p.sum() + p_c;
    };
    fp.maximize_shifted = [&](double eta, const VectorXd& warm,
                              SolveReport* inner) -> VectorXd {
      if (inner != nullptr) inner->termination = Termination::Converged;
      if (!(eta > 0.0)) return full.powers;
      const double level = bandwidth_hz / (eta * pm_d.mu * std::numbers::ln2);
      VectorXd p = VectorXd::Zero(warm.size());
      for (Eigen::Index i = 0; i < p.size(); ++i)
        if (gains[i] > 0.0) p[i] = std::max(0.0, level - 1.0 / gains[i]);
      return p.sum() <= p_max ? p : full.powers;
    };
    auto [p_star, rep] = dinkelbach(fp, full.powers, opts);
    sol.powers = std::move(p_star);
    sol.report = std::move(rep);
  }

  sol.capacity_bps = bandwidth_hz * capacity_bits(sol.powers);
  sol.total_power_w = pm_d.mu * sol.powers.sum() + p_c;
  sol.ee_bits_per_joule =
      energy_efficiency(sol.capacity_bps, sol.total_power_w);
  return sol;
}

// ---------------------------------------------------------------------------
// Monte-Carlo sweep
// ---------------------------------------------------------------------------

/// One aggregated sweep point.  Means and deviations are over the successful
/// draws; a point with no successes reports zeros and its failure count.
struct SweepRecord {
  double sweep_value = 0.0;  // dBm
  double mean_ee_bits_per_joule = 0.0;
  double std_ee = 0.0;
  double mean_capacity_bps = 0.0;
  double std_capacity = 0.0;
  double mean_outer_iters = 0.0;
  int failed_draws = 0;
};

struct SweepResult {
  std::vector<SweepRecord> records;  // one per sweep value, in sweep order
  nlohmann::json metadata;           // resolved config and provenance
};

namespace detail {

struct DrawOutcome {
  bool ok = false;
  double ee = 0.0;
  double capacity = 0.0;
  double iters = 0.0;
};

inline DrawOutcome run_draw(const ExperimentConfig& cfg, const ChannelSet& ch,
                            const MatrixXcd& h_direct, double sigma2,
                            const PowerModel& pm, double p_max,
                            const SolverOptions& opts, double bandwidth_hz) {
  DrawOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (cfg.architecture) {
      case Architecture::Siso: {
        const SisoSolution s =
            solve_siso(ch, pm, p_max, cfg.mode, bandwidth_hz, opts);
        out = {true, s.ee_bits_per_joule, s.capacity_bps,
               static_cast<double>(s.report.iterations)};
        break;
      }
      case Architecture::SingleStream: {
        const SingleStreamSolution s = alternate_single_stream(
            ch, pm, p_max, cfg.mode, bandwidth_hz, opts);
        out = {true, s.ee_bits_per_joule, s.capacity_bps,
               static_cast<double>(s.report.iterations)};
        break;
      }
      case Architecture::MultiStream: {
        const MultiStreamSolution s = alternate_multi_stream(
            ch, pm, p_max, cfg.mode, bandwidth_hz, opts);
        out = {true, s.ee_bits_per_joule, s.capacity_bps,
               static_cast<double>(s.report.iterations)};
        break;
      }
      case Architecture::DigitalOnly: {
        const DigitalOnlySolution s =
            solve_digital_only(h_direct, sigma2, pm, p_max, cfg.mode,
                               cfg.digital_streams, bandwidth_hz, opts);
        out = {true, s.ee_bits_per_joule, s.capacity_bps,
               static_cast<double>(s.report.iterations)};
        break;
      }
    }
  } catch (const std::exception&) {
    out.ok = false;  // recorded as a failed draw, not fatal
  }
  if (cfg.draw_time_cap_s > 0.0) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (elapsed > cfg.draw_time_cap_s) out.ok = false;
  }
  return out;
}

}  // namespace detail

/// Runs the configured Monte-Carlo sweep.  Channels are keyed by the draw
/// index alone, so every sweep value sees the same fading realizations
/// (common random numbers); results are deterministic for a given
/// (config, seed) regardless of the worker count.  Per-draw solver failures
/// are recorded; the experiment itself fails only when more than 20% of all
/// draws fail.
inline SweepResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const LinkScenario link = make_link_scenario(cfg.scenario);
  const double bandwidth_hz = link.bandwidth_hz;
  const double sigma2 = link.noise_variance();

  SolverOptions opts = cfg.solver;
  // The fractional certificate |F| is absolute in rate units; keep the
  // configured tolerance meaningful when capacities carry the bandwidth.
  opts.obj_tol = cfg.solver.obj_tol * std::max(1.0, bandwidth_hz);
  opts.time_cap_s = cfg.draw_time_cap_s;

  const int s_count = static_cast<int>(cfg.sweep_values.size());
  const int d_count = cfg.monte_carlo_draws;
  std::vector<detail::DrawOutcome> outcomes(
      static_cast<std::size_t>(s_count) * d_count);

  std::atomic<int> next_draw{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  const auto worker = [&]() {
    try {
      for (;;) {
        const int d = next_draw.fetch_add(1);
        if (d >= d_count) return;
        // One fading realization per draw, shared across the sweep.
        ChannelSet ch;
        MatrixXcd h_direct;
        bool synth_ok = true;
        try {
          if (cfg.architecture == Architecture::DigitalOnly)
            h_direct = synthesize_direct_channel(link, d);
          else
            ch = build_channels(link, d);
        } catch (const std::exception&) {
          synth_ok = false;
        }
        for (int s = 0; s < s_count; ++s) {
          const double v = cfg.sweep_values[s];
          PowerModel pm = cfg.power;
          double p_max = dbm_to_watts(cfg.p_max_dbm);
          if (cfg.sweep_variable == SweepVariable::PMaxDbm) {
            p_max = dbm_to_watts(v);
          } else {
            pm.per_chain_static_tx = dbm_to_watts(v);
            pm.per_chain_static_rx = dbm_to_watts(v);
          }
          auto& slot = outcomes[static_cast<std::size_t>(s) * d_count + d];
          slot = synth_ok
                     ? detail::run_draw(cfg, ch, h_direct, sigma2, pm, p_max,
                                        opts, bandwidth_hz)
                     : detail::DrawOutcome{};
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  const int workers = std::clamp(cfg.threads, 1, std::max(1, d_count));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  SweepResult result;
  result.records.resize(s_count);
  int failed_total = 0;
  for (int s = 0; s < s_count; ++s) {
    SweepRecord& rec = result.records[s];
    rec.sweep_value = cfg.sweep_values[s];
    std::vector<const detail::DrawOutcome*> ok;
    ok.reserve(d_count);
    for (int d = 0; d < d_count; ++d) {
      const auto& o = outcomes[static_cast<std::size_t>(s) * d_count + d];
      if (o.ok)
        ok.push_back(&o);
      else
        ++rec.failed_draws;
    }
    failed_total += rec.failed_draws;
    const auto n = static_cast<double>(ok.size());
    if (!ok.empty()) {
      for (const auto* o : ok) {
        rec.mean_ee_bits_per_joule += o->ee;
        rec.mean_capacity_bps += o->capacity;
        rec.mean_outer_iters += o->iters;
      }
      rec.mean_ee_bits_per_joule /= n;
      rec.mean_capacity_bps /= n;
      rec.mean_outer_iters /= n;
    }
    if (ok.size() > 1) {
      double v_ee = 0.0, v_cap = 0.0;
      for (const auto* o : ok) {
        v_ee += (o->ee - rec.mean_ee_bits_per_joule) *
                (o->ee - rec.mean_ee_bits_per_joule);
        v_cap += (o->capacity - rec.mean_capacity_bps) *
                 (o->capacity - rec.mean_capacity_bps);
      }
      rec.std_ee = std::sqrt(v_ee / (n - 1.0));
      rec.std_capacity = std::sqrt(v_cap / (n - 1.0));
    }
  }

  const int total = s_count * d_count;
  if (5 * failed_total > total)
    throw solver_error("run_experiment: " + std::to_string(failed_total) +
                       " of " + std::to_string(total) +
                       " draws failed (more than 20%)");

  result.metadata = nlohmann::json{
      {"tool", "hmimo"},
      {"version", kVersionString},
      {"config", cfg},
      {"units",
       nlohmann::json{{"sweep_value", "dBm"},
                      {"mean_ee_bits_per_joule", "bits/Joule"},
                      {"std_ee", "bits/Joule"},
                      {"mean_capacity_bps", "bits/s"},
                      {"std_capacity", "bits/s"},
                      {"mean_outer_iters", "iterations"},
                      {"failed_draws", "count"}}},
      {"noise_variance_w", sigma2},
      {"digital_baseline_note",
       "digital_only uses a direct Rician channel between the two digital "
       "arrays (same K factor, path loss at the array separation) with the "
       "surfaces and their static power removed; this modeling choice "
       "affects cross-architecture comparisons"}};
  return result;
}

/// Writes the sweep as CSV: one header row, then one record per sweep point,
/// floats at 12 significant digits.  A JSON sidecar at `<path>.meta.json`
/// documents units and the fully resolved configuration.
inline void emit_csv(const SweepResult& result, const std::string& path) {
  std::ofstream csv(path, std::ios::trunc);
  if (!csv)
    throw model_error("emit_csv: cannot open '" + path + "' for writing");
  csv << "sweep_value,mean_ee_bits_per_joule,std_ee,mean_capacity_bps,"
         "std_capacity,mean_outer_iters,failed_draws\n";
  char buf[32];
  const auto fmt = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return std::string(buf);
  };
  for (const SweepRecord& r : result.records) {
    csv << fmt(r.sweep_value) << ',' << fmt(r.mean_ee_bits_per_joule) << ','
        << fmt(r.std_ee) << ',' << fmt(r.mean_capacity_bps) << ','
        << fmt(r.std_capacity) << ',' << fmt(r.mean_outer_iters) << ','
        << r.failed_draws << '\n';
  }
  if (!csv)
    throw model_error("emit_csv: write to '" + path + "' failed");
  csv.close();

  if (!result.metadata.is_null()) {
    const std::string meta_path = path + ".meta.json";
    std::ofstream meta(meta_path, std::ios::trunc);
    if (!meta)
      throw model_error("emit_csv: cannot open '" + meta_path +
                        "' for writing");
    meta << result.metadata.dump(2) << '\n';
    if (!meta)
      throw model_error("emit_csv: write to '" + meta_path + "' failed");
  }
}

}  // namespace hmimo

#endif  // HMIMO_HARNESS_HPP
