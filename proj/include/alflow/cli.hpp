#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "alflow/errors.hpp"
#include "alflow/spectral.hpp"

namespace alflow {

enum class RunPath { direct, algebraic, both };
enum class OutputFormat { csv, json };

struct RunConfig {
    std::vector<double> a;

    // Exactly one of the two is present.
    std::optional<NeumannState> state;
    struct SpectrumSeed {
        std::vector<double> c;
        Poly U;
        Poly V;
    };
    std::optional<SpectrumSeed> spectrum;

    double t_end = 5.0;
    double dt_out = 0.01;
    double rtol = 1e-10;
    RunPath path = RunPath::both;
    long seed = 0; // reserved for randomized batch fixtures
    OutputFormat format = OutputFormat::csv;
};

// 17 significant digits: exact round trip for 64-bit doubles.
inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::vector<double> json_number_array(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array())
        throw ConfigError("config: \"" + key + "\" must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number())
            throw ConfigError("config: \"" + key + "\" must contain only numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline double json_number(const nlohmann::json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError("config: \"" + key + "\" must be a number");
    return j.get<double>();
}

inline void emit_json_numbers(std::ostream& os, const std::vector<double>& v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << fmt17(v[i]);
    }
    os << ']';
}

} // namespace detail

// Parses and validates a merged configuration object. Every key is checked;
// unknown keys are rejected so typos cannot silently change a run.
inline RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    static const std::vector<std::string> known = {
        "a", "q", "qdot", "c", "U", "V", "t_end", "dt_out", "rtol", "path", "seed", "format"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("config: unknown key \"" + it.key() + "\"");
    }

    RunConfig cfg;
    if (!j.contains("a")) throw ConfigError("config: missing \"a\"");
    cfg.a = detail::json_number_array(j.at("a"), "a");
    if (cfg.a.size() < 2) throw ConfigError("config: \"a\" needs at least two entries (g >= 1)");
    for (std::size_t i = 0; i < cfg.a.size(); ++i)
        for (std::size_t k = i + 1; k < cfg.a.size(); ++k)
            if (std::abs(cfg.a[i] - cfg.a[k]) <= kMinBranchGap)
                throw ConfigError("config: duplicate coupling constants a[" + std::to_string(i) +
                                  "] and a[" + std::to_string(k) + "]");
    const std::size_t n = cfg.a.size();
    const int g = static_cast<int>(n) - 1;

    const bool has_state = j.contains("q") || j.contains("qdot");
    const bool has_spectrum = j.contains("c") || j.contains("U") || j.contains("V");
    if (has_state == has_spectrum)
        throw ConfigError("config: provide exactly one of {q, qdot} or {c, U, V}");

    if (has_state) {
        if (!j.contains("q") || !j.contains("qdot"))
            throw ConfigError("config: \"q\" and \"qdot\" must both be present");
        NeumannState s;
        s.q = detail::json_number_array(j.at("q"), "q");
        s.qdot = detail::json_number_array(j.at("qdot"), "qdot");
        if (s.q.size() != n || s.qdot.size() != n)
            throw ConfigError("config: \"q\" and \"qdot\" must have " + std::to_string(n) +
                              " entries");
        if (sphere_residual(s) > 1e-6)
            throw ConfigError("config: q is not on the unit sphere, |sum q^2 - 1| = " +
                              std::to_string(sphere_residual(s)));
        if (tangency_residual(s) > 1e-6)
            throw ConfigError("config: qdot is not tangent, |sum q qdot| = " +
                              std::to_string(tangency_residual(s)));
        cfg.state = std::move(s);
    } else {
        if (!j.contains("c") || !j.contains("U") || !j.contains("V"))
            throw ConfigError("config: \"c\", \"U\" and \"V\" must all be present");
        RunConfig::SpectrumSeed seed;
        seed.c = detail::json_number_array(j.at("c"), "c");
        if (seed.c.size() + 1 != n)
            throw ConfigError("config: \"c\" must have " + std::to_string(g) + " entries");
        std::vector<double> uc = detail::json_number_array(j.at("U"), "U");
        if (static_cast<int>(uc.size()) != g + 1)
            throw ConfigError("config: \"U\" must list " + std::to_string(g + 1) +
                              " coefficients, ascending degree");
        if (std::abs(uc.back() - 1.0) > 1e-12)
            throw ConfigError("config: \"U\" must be monic");
        std::vector<double> vc = detail::json_number_array(j.at("V"), "V");
        if (static_cast<int>(vc.size()) > g)
            throw ConfigError("config: \"V\" must have degree <= " + std::to_string(g - 1));
        seed.U = Poly(std::move(uc));
        seed.V = Poly(std::move(vc));
        cfg.spectrum = std::move(seed);
    }

    if (j.contains("t_end")) cfg.t_end = detail::json_number(j.at("t_end"), "t_end");
    if (!(cfg.t_end >= 0.0)) throw ConfigError("config: t_end must be >= 0");
    if (j.contains("dt_out")) cfg.dt_out = detail::json_number(j.at("dt_out"), "dt_out");
    if (!(cfg.dt_out > 0.0)) throw ConfigError("config: dt_out must be > 0");
    if (j.contains("rtol")) cfg.rtol = detail::json_number(j.at("rtol"), "rtol");
    if (!(cfg.rtol >= 1e-13 && cfg.rtol <= 1e-6))
        throw ConfigError("config: rtol must lie in [1e-13, 1e-6]");
    if (j.contains("path")) {
        const std::string p = j.at("path").is_string() ? j.at("path").get<std::string>() : "";
        if (p == "direct") cfg.path = RunPath::direct;
        else if (p == "algebraic") cfg.path = RunPath::algebraic;
        else if (p == "both") cfg.path = RunPath::both;
        else throw ConfigError("config: path must be one of direct|algebraic|both");
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer())
            throw ConfigError("config: seed must be an integer");
        cfg.seed = j.at("seed").get<long>();
    }
    if (j.contains("format")) {
        const std::string f = j.at("format").is_string() ? j.at("format").get<std::string>() : "";
        if (f == "csv") cfg.format = OutputFormat::csv;
        else if (f == "json") cfg.format = OutputFormat::json;
        else throw ConfigError("config: format must be csv or json");
    }
    return cfg;
}

namespace detail {

struct PreparedRun {
    NeumannState s0;
    std::shared_ptr<const CurveSpec> curve; // null when the spectrum degenerates
    std::optional<MumfordTriple> triple;
    SignTracker tracker;
};

// Resolves the configured initial data into state + triple as far as the
// requested paths need them. Spectrum-seeded runs recover the state with
// all-plus signs (the seed carries none).
inline PreparedRun prepare(const RunConfig& cfg, bool need_triple) {
    PreparedRun r;
    if (cfg.spectrum) {
        auto curve = std::make_shared<const CurveSpec>(make_curve(cfg.a, cfg.spectrum->c));
        r.curve = curve;
        r.triple = MumfordTriple{cfg.spectrum->U, cfg.spectrum->V, curve};
        r.tracker = SignTracker::all_plus(cfg.a.size());
        r.s0 = recover_state(*r.triple, r.tracker);
    } else {
        r.s0 = *cfg.state;
        r.tracker = SignTracker::from_state(r.s0);
        if (need_triple) {
            SpectralData sd = spectrum_from_state(cfg.a, r.s0);
            r.curve = sd.curve;
            r.triple = std::move(sd.triple);
        }
    }
    return r;
}

struct SimRow {
    double t;
    NeumannState s;
    double wp;
    std::vector<double> m;
    double res_frobenius1;
    double res_path; // res_constraint (direct) or res_divisibility (algebraic)
};

inline std::vector<SimRow> direct_rows(const RunConfig& cfg, const Trajectory& traj) {
    std::vector<SimRow> rows;
    rows.reserve(traj.times.size());
    double suma = 0.0;
    for (double v : cfg.a) suma += v;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        SimRow r;
        r.t = traj.times[k];
        r.s = traj.states[k];
        double saq = 0.0, sq = -1.0;
        for (std::size_t i = 0; i < cfg.a.size(); ++i) {
            saq += cfg.a[i] * r.s.q[i] * r.s.q[i];
            sq += r.s.q[i] * r.s.q[i];
        }
        r.wp = suma - saq;
        r.m = uhlenbeck_m(cfg.a, r.s);
        r.res_frobenius1 = std::abs(sq);
        r.res_path = std::max(traj.residuals[k].at("res_constraint"),
                              traj.residuals[k].at("res_constraint_dot"));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::vector<SimRow> algebraic_rows(const RunConfig& cfg,
                                          const std::vector<FlowSample>& flow,
                                          const Trajectory& traj) {
    std::vector<SimRow> rows;
    rows.reserve(traj.times.size());
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        SimRow r;
        r.t = traj.times[k];
        r.s = traj.states[k];
        r.wp = wp_gg(flow[k].triple);
        r.m = uhlenbeck_m(cfg.a, r.s);
        r.res_frobenius1 = traj.residuals[k].at("res_frobenius1");
        r.res_path = traj.residuals[k].at("res_divisibility");
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace detail

// -- commands -----------------------------------------------------------
//
// Exit codes: 0 ok, 1 invariant failure (invariants command only),
// 2 config error (thrown as ConfigError before any output), 3 numerical
// failure with a diagnostic on the error stream.

inline int run_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    try {
        const bool want_direct = cfg.path != RunPath::algebraic;
        const bool want_algebraic = cfg.path != RunPath::direct;
        detail::PreparedRun pr = detail::prepare(cfg, want_algebraic);

        std::vector<detail::SimRow> drows, arows;
        if (want_direct) {
            const Trajectory traj = integrate(cfg.a, pr.s0, cfg.t_end, cfg.dt_out, cfg.rtol);
            drows = detail::direct_rows(cfg, traj);
        }
        if (want_algebraic) {
            const std::vector<FlowSample> flow =
                integrate_flow(*pr.triple, cfg.t_end, cfg.dt_out, cfg.rtol);
            const Trajectory traj = track_along(flow, pr.tracker);
            arows = detail::algebraic_rows(cfg, flow, traj);
        }

        double maxdiff = 0.0;
        if (want_direct && want_algebraic) {
            for (std::size_t k = 0; k < drows.size(); ++k)
                for (std::size_t i = 0; i < cfg.a.size(); ++i) {
                    maxdiff = std::max(maxdiff,
                                       std::abs(drows[k].s.q[i] - arows[k].s.q[i]));
                    maxdiff = std::max(maxdiff,
                                       std::abs(drows[k].s.qdot[i] - arows[k].s.qdot[i]));
                }
        }

        // Build the whole document before writing a byte, so failures never
        // leave partial output on the stream.
        std::ostringstream buf;
        const std::size_t n = cfg.a.size();
        const auto emit_block = [&](const std::vector<detail::SimRow>& rows,
                                    const char* res_name) {
            buf << "t";
            for (std::size_t i = 1; i <= n; ++i) buf << ",q_" << i;
            for (std::size_t i = 1; i <= n; ++i) buf << ",qdot_" << i;
            buf << ",H,L,wp_gg";
            for (std::size_t i = 1; i <= n; ++i) buf << ",m_" << i;
            buf << ",res_frobenius1," << res_name << "\n";
            for (const detail::SimRow& r : rows) {
                buf << fmt17(r.t);
                for (double v : r.s.q) buf << ',' << fmt17(v);
                for (double v : r.s.qdot) buf << ',' << fmt17(v);
                buf << ',' << fmt17(hamiltonian(cfg.a, r.s));
                buf << ',' << fmt17(lagrangian(cfg.a, r.s));
                buf << ',' << fmt17(r.wp);
                for (double v : r.m) buf << ',' << fmt17(v);
                buf << ',' << fmt17(r.res_frobenius1);
                buf << ',' << fmt17(r.res_path);
                buf << "\n";
            }
        };
        const auto emit_block_json = [&](const std::vector<detail::SimRow>& rows,
                                         const char* res_name) {
            buf << "{\"columns\":[\"t\"";
            for (std::size_t i = 1; i <= n; ++i) buf << ",\"q_" << i << "\"";
            for (std::size_t i = 1; i <= n; ++i) buf << ",\"qdot_" << i << "\"";
            buf << ",\"H\",\"L\",\"wp_gg\"";
            for (std::size_t i = 1; i <= n; ++i) buf << ",\"m_" << i << "\"";
            buf << ",\"res_frobenius1\",\"" << res_name << "\"],\"rows\":[";
            for (std::size_t k = 0; k < rows.size(); ++k) {
                const detail::SimRow& r = rows[k];
                if (k) buf << ',';
                buf << '[' << fmt17(r.t);
                for (double v : r.s.q) buf << ',' << fmt17(v);
                for (double v : r.s.qdot) buf << ',' << fmt17(v);
                buf << ',' << fmt17(hamiltonian(cfg.a, r.s));
                buf << ',' << fmt17(lagrangian(cfg.a, r.s));
                buf << ',' << fmt17(r.wp);
                for (double v : r.m) buf << ',' << fmt17(v);
                buf << ',' << fmt17(r.res_frobenius1);
                buf << ',' << fmt17(r.res_path) << ']';
            }
            buf << "]}";
        };

        if (cfg.format == OutputFormat::csv) {
            bool first = true;
            if (want_direct) {
                emit_block(drows, "res_constraint");
                first = false;
            }
            if (want_algebraic) {
                if (!first) buf << "\n";
                emit_block(arows, "res_divisibility");
            }
            if (want_direct && want_algebraic)
                buf << "maxdiff=" << fmt17(maxdiff) << "\n";
        } else {
            buf << "{";
            if (want_direct) {
                buf << "\"direct\":";
                emit_block_json(drows, "res_constraint");
            }
            if (want_algebraic) {
                if (want_direct) buf << ',';
                buf << "\"algebraic\":";
                emit_block_json(arows, "res_divisibility");
            }
            if (want_direct && want_algebraic)
                buf << ",\"maxdiff\":" << fmt17(maxdiff);
            buf << "}\n";
        }
        out << buf.str();
        return 0;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        diag << "simulate: " << e.what() << "\n";
        return 3;
    }
}

inline int run_invariants(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    constexpr double threshold = 1e-7;
    try {
        std::map<std::string, double> worst;
        const auto fold = [&worst](const std::map<std::string, double>& m) {
            for (const auto& [k, v] : m) {
                auto it = worst.find(k);
                if (it == worst.end()) worst[k] = v;
                else it->second = std::max(it->second, v);
            }
        };

        bool degenerate = false;
        std::size_t nsamples = 0;

        if (cfg.spectrum) {
            auto curve = std::make_shared<const CurveSpec>(make_curve(cfg.a, cfg.spectrum->c));
            const MumfordTriple T0{cfg.spectrum->U, cfg.spectrum->V, curve};
            const double d0 = divisibility_residual(T0);
            worst["res_divisibility"] = d0;
            if (d0 <= threshold) {
                const std::vector<FlowSample> flow =
                    integrate_flow(T0, cfg.t_end, cfg.dt_out, cfg.rtol);
                const Trajectory traj = track_along(flow, SignTracker::all_plus(cfg.a.size()));
                nsamples = flow.size();
                for (const FlowSample& fs : flow) fold(identity_residuals(fs.triple));
                for (const auto& res : traj.residuals) fold(res);
                fold(conserved_report(traj, cfg.a));
            }
        } else {
            const Trajectory traj = integrate(cfg.a, *cfg.state, cfg.t_end, cfg.dt_out, cfg.rtol);
            nsamples = traj.times.size();
            for (const auto& res : traj.residuals) fold(res);
            fold(conserved_report(traj, cfg.a));
            try {
                for (const NeumannState& s : traj.states) {
                    const SpectralData sd = spectrum_from_state(cfg.a, s);
                    fold(identity_residuals(sd.triple));
                    fold({{"res_divisibility", sd.residuals.at("divisibility")}});
                }
            } catch (const DegenerateSpectrumError&) {
                degenerate = true; // identity subset only
            }
        }

        bool pass = true;
        for (const auto& [k, v] : worst)
            if (k.rfind("diag_", 0) != 0 && !(v <= threshold)) pass = false;

        std::ostringstream buf;
        buf << "{\"residuals\":{";
        bool first = true;
        for (const auto& [k, v] : worst) {
            if (!first) buf << ',';
            first = false;
            buf << '"' << k << "\":" << fmt17(v);
        }
        buf << "},\"samples\":" << nsamples
            << ",\"degenerate_spectrum\":" << (degenerate ? "true" : "false")
            << ",\"threshold\":" << fmt17(threshold)
            << ",\"pass\":" << (pass ? "true" : "false") << "}\n";
        out << buf.str();
        return pass ? 0 : 1;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        diag << "invariants: " << e.what() << "\n";
        return 3;
    }
}

inline int run_spectrum(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    if (!cfg.state)
        throw ConfigError("spectrum: requires a state config ({q, qdot})");
    try {
        const SpectralData sd = spectrum_from_state(cfg.a, *cfg.state);
        const WResult w = w_poly(sd.triple);
        std::ostringstream buf;
        buf << "{\"c\":";
        detail::emit_json_numbers(buf, sd.curve->c);
        buf << ",\"m\":";
        detail::emit_json_numbers(buf, sd.m);
        buf << ",\"H_curve\":" << fmt17(hamiltonian_from_curve(*sd.curve));
        buf << ",\"H_state\":" << fmt17(hamiltonian(cfg.a, *cfg.state));
        buf << ",\"interlaced\":" << (is_interlaced(*sd.curve) ? "true" : "false");
        buf << ",\"U\":";
        detail::emit_json_numbers(buf, sd.triple.U.coeffs());
        buf << ",\"V\":";
        detail::emit_json_numbers(buf, sd.triple.V.coeffs());
        buf << ",\"W\":";
        detail::emit_json_numbers(buf, w.W.coeffs());
        buf << "}\n";
        out << buf.str();
        return 0;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        diag << "spectrum: " << e.what() << "\n";
        return 3;
    }
}

} // namespace alflow
