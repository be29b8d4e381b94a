// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include "replica_cdma/config.hpp"
#include "replica_cdma/fixed_point.hpp"
#include "replica_cdma/sim/mc.hpp"
#include "replica_cdma/spectral_efficiency.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace replica_cdma::cli {
namespace {

using json = nlohmann::json;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format(double v) { return num(v); }
std::string format(int v) { return std::to_string(v); }
std::string format(long long v) { return std::to_string(v); }
std::string format(unsigned long long v) { return std::to_string(v); }
std::string format(const std::string& v) { return v; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
    return q + "\"";
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!trim(item).empty()) parts.push_back(trim(item));
    return parts;
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(what, "cannot parse '" + s + "' as a number for " + what);
}

int to_int(const std::string& s, const std::string& what) {
    const double v = to_double(s, what);
    if (v != std::floor(v)) throw ConfigError(what, what + " must be an integer");
    return static_cast<int>(v);
}

struct Options {
    std::string config;
    std::string out;
    double beta = 0.5;
    int m = 1;
    int n = 1;
    double snr_db = 6.0;
    double power = 1.0;
    int tc = 20;
    int tau = 4;
    std::string tau_range;
    std::string receivers = "joint,one-shot,separated,lmmse,perfect";
    int kappa_nodes = 33;
    int quad_nodes = 64;
    int max_iters = 10000;
    double kappa = 0.0;
    std::string detector = "optimal";
    int k = 16;
    int l = 16;
    std::string snr_grid = "0:2:12";
    long long trials = 6250;
    unsigned long long seed = 1;
    std::string spreading = "qpsk";
    std::string antennas = "1,2,4,8,16";
    int points = 200;
};

struct Command {
    CLI::App* app = nullptr;
    std::vector<std::pair<std::string, std::function<std::string()>>> params;

    template <class T>
    void add(const std::string& flag, T& var, const std::string& desc) {
        app->add_option("--" + flag, var, desc)->capture_default_str();
        params.emplace_back(flag, [&var] { return format(var); });
    }

    json resolved() const {
        json j = json::object();
        for (const auto& [k, f] : params) j[k] = f();
        return j;
    }
};

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = trim(buf.str());
    std::map<std::string, std::string> kv;
    auto key_of = [](std::string k) {
        for (char& c : k)
            if (c == '_') c = '-';
        return k;
    };
    if (!text.empty() && text.front() == '{') {
        json j = json::parse(text);
        const json& obj = j.contains("parameters") ? j.at("parameters") : j;
        for (const auto& [k, v] : obj.items()) {
            std::string s;
            if (v.is_string())
                s = v.get<std::string>();
            else if (v.is_array()) {
                for (const auto& e : v) s += (s.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
            } else
                s = v.dump();
            kv[key_of(k)] = s;
        }
        return kv;
    }
    std::stringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config", "expected key=value, got '" + line + "'");
        kv[key_of(trim(line.substr(0, eq)))] = trim(line.substr(eq + 1));
    }
    return kv;
}

// Values from the file fill every option not given on the command line.
void apply_config(CLI::App* sub, const std::string& path) {
    for (const auto& [k, v] : read_config(path)) {
        if (k == "config" || k == "out") continue;
        CLI::Option* opt = sub->get_option_no_throw("--" + k);
        if (!opt) throw ConfigError("config", "unknown key '" + k + "' for " + sub->get_name());
        if (opt->count() == 0) {
            opt->add_result(v);
            opt->run_callback();
        }
    }
}

SystemConfig base_config(const Options& o, int tau) {
    SystemParams p;
    p.beta = o.beta;
    p.M = o.m;
    p.N = o.n;
    p.P = o.power;
    p.N0 = noise_for_snr_db(o.power, o.snr_db);
    p.Tc = o.tc;
    p.tau = tau;
    return validate(p);
}

EvalOptions eval_options(const Options& o) {
    if (o.quad_nodes < 2) throw ConfigError("quad-nodes", "quad-nodes must be at least 2");
    if (o.kappa_nodes < 2) throw ConfigError("kappa-nodes", "kappa-nodes must be at least 2");
    if (o.max_iters < 1) throw ConfigError("max-iters", "max-iters must be at least 1");
    EvalOptions e;
    e.solver.quad = {o.quad_nodes, o.quad_nodes};
    e.kappa.nodes = o.kappa_nodes;
    e.solver.max_iters = o.max_iters;
    return e;
}

std::vector<ReceiverKind> parse_receivers(const std::string& s) {
    std::vector<ReceiverKind> r;
    for (const std::string& name : split(s, ',')) r.push_back(parse_receiver(name));
    if (r.empty()) throw ConfigError("receivers", "no receivers selected");
    return r;
}

Detector parse_detector(const std::string& s) {
    if (s == "optimal") return Detector::Optimal;
    if (s == "lmmse") return Detector::Lmmse;
    throw ConfigError("detector", "detector must be optimal or lmmse");
}

// "a:b" inclusive integer range.
std::pair<int, int> parse_tau_range(const std::string& s, int Tc) {
    if (s.empty()) return {0, Tc};
    const auto c = s.find(':');
    if (c == std::string::npos) {
        const int t = to_int(s, "tau-range");
        return {t, t};
    }
    const int a = to_int(s.substr(0, c), "tau-range");
    const int b = to_int(s.substr(c + 1), "tau-range");
    if (a < 0 || b > Tc || a > b) throw ConfigError("tau-range", "tau-range must satisfy 0 <= a <= b <= Tc");
    return {a, b};
}

// "start:step:stop" or a comma list.
std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> g;
    const auto parts = split(s, ':');
    if (parts.size() == 3 && s.find(',') == std::string::npos) {
        const double a = to_double(parts[0], "snr-grid"), h = to_double(parts[1], "snr-grid"),
                     b = to_double(parts[2], "snr-grid");
        if (!(h > 0.0) || b < a) throw ConfigError("snr-grid", "snr-grid must be start:step:stop with step > 0");
        const int n = static_cast<int>(std::floor((b - a) / h + 1e-9));
        for (int i = 0; i <= n; ++i) g.push_back(a + i * h);
        return g;
    }
    for (const std::string& p : split(s, ',')) g.push_back(to_double(p, "snr-grid"));
    if (g.empty()) throw ConfigError("snr-grid", "empty SNR grid");
    return g;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
    std::vector<int> v;
    for (const std::string& p : split(s, ',')) v.push_back(to_int(p, what));
    if (v.empty()) throw ConfigError(what, "empty list for " + what);
    return v;
}

bool needs_integrals(const std::vector<ReceiverKind>& rs) {
    for (ReceiverKind r : rs)
        if (r == ReceiverKind::JointCeMudd || r == ReceiverKind::OneShotCeMudd || r == ReceiverKind::PerfectCsiBound)
            return true;
    return false;
}

bool cmd_sweep_tau(const Options& o, std::ostream& out) {
    const SystemConfig cfg = base_config(o, 0);
    const auto receivers = parse_receivers(o.receivers);
    const auto [lo, hi] = parse_tau_range(o.tau_range, cfg.Tc());
    SeEvaluator ev(cfg, eval_options(o));
    try {
        ev.precompute(needs_integrals(receivers), true);
    } catch (const std::exception&) {
        // Failures are reported on the affected rows below.
    }
    bool failed = false;
    out << "receiver,tau,tau_over_Tc,se_bits_per_chip,sigma_c2_selected,n_candidates,error\n";
    for (ReceiverKind r : receivers) {
        const ReceiverCurve curve = sweep_tau(ev, r, lo, hi);
        for (const CurvePoint& p : curve.points) {
            failed |= !p.error.empty();
            out << to_string(r) << ',' << static_cast<int>(p.x) << ',' << num(p.x / cfg.Tc()) << ',' << num(p.se) << ','
                << num(p.sigma2_selected) << ',' << p.n_candidates << ',' << csv_field(p.error) << '\n';
        }
    }
    return failed;
}

json candidate_json(const Candidate& c) {
    json j{{"sigma2", c.sigma2}, {"residual", c.residual}, {"converged", c.converged},
           {"iterations", c.iterations}, {"seed", c.seed}};
    j["free_energy"] = std::isfinite(c.free_energy) ? json(c.free_energy) : json(nullptr);
    j["mutual_info"] = std::isfinite(c.mutual_info) ? json(c.mutual_info) : json(nullptr);
    return j;
}

bool cmd_fixed_point(const Options& o, std::ostream& out) {
    const SystemConfig cfg = base_config(o, o.tau);
    const Detector det = parse_detector(o.detector);
    const TrainingSolution tr = solve_training(cfg, cfg.tau());
    json j;
    j["kappa"] = o.kappa;
    j["detector"] = std::string(to_string(det));
    j["training"] = {{"sigma_tr2", tr.sigma_tr2()}, {"xi2", tr.xi2()}, {"pilots", tr.pilots()}};
    j["N0"] = cfg.N0();
    bool failed = false;
    try {
        const FixedPointOutcome fp = data_fixed_point(cfg, tr, o.kappa, det, eval_options(o).solver);
        j["candidates"] = json::array();
        for (const Candidate& c : fp.candidates()) j["candidates"].push_back(candidate_json(c));
        j["selected"] = fp.selected_index();
        j["n_converged"] = fp.n_converged();
        j["error"] = nullptr;
    } catch (const NoConvergence& e) {
        failed = true;
        j["candidates"] = json::array();
        for (const Candidate& c : e.attempts()) j["candidates"].push_back(candidate_json(c));
        j["selected"] = nullptr;
        j["error"] = e.what();
    }
    out << j.dump(2) << '\n';
    return failed;
}

bool cmd_simulate_ser(const Options& o, std::ostream& out) {
    SystemParams p;
    p.beta = static_cast<double>(o.k) / o.l;
    p.M = o.m;
    p.N = o.n;
    p.P = o.power;
    p.N0 = 1.0;
    p.Tc = o.tc;
    p.tau = o.tau;
    const SystemConfig cfg = validate(p);
    if (o.trials < 1) throw ConfigError("trials", "trials must be at least 1");
    const sim::McConfig mc = sim::McConfig::make(o.k, o.l, cfg, parse_grid(o.snr_grid), o.trials, o.seed,
                                                 sim::parse_spreading(o.spreading));
    const auto points = sim::run_ser(mc);
    const SolverSpec spec = eval_options(o).solver;
    bool failed = false;
    out << "snr_db,K,L,tau,ser_mc,ci95,ser_asymptotic,error\n";
    for (const sim::SerPoint& pt : points) {
        std::string err;
        double asym = NAN;
        try {
            asym = sim::asymptotic_ser(cfg.with_snr_db(pt.snr_db), spec);
        } catch (const std::exception& e) {
            err = e.what();
            failed = true;
        }
        out << num(pt.snr_db) << ',' << o.k << ',' << o.l << ',' << o.tau << ',' << num(pt.ser.p_hat) << ','
            << num(pt.ser.ci95) << ',' << num(asym) << ',' << csv_field(err) << '\n';
    }
    return failed;
}

bool cmd_optimize_tau(const Options& o, std::ostream& out) {
    const SystemConfig cfg = base_config(o, 0);
    const auto receivers = parse_receivers(o.receivers);
    const auto antennas = parse_int_list(o.antennas, "antennas");
    const EvalOptions eo = eval_options(o);
    bool failed = false;
    out << "M,N,receiver,tau_opt,tau_opt_over_Tc,se_at_opt,error\n";
    for (int a : antennas) {
        const SystemConfig c = cfg.with_antennas(a, a);
        SeEvaluator ev(c, eo);
        try {
            ev.precompute(needs_integrals(receivers), true);
        } catch (const std::exception&) {
        }
        for (ReceiverKind r : receivers) {
            out << a << ',' << a << ',' << to_string(r) << ',';
            try {
                const TauOptimum t = optimize_tau(ev, r);
                out << t.tau << ',' << num(static_cast<double>(t.tau) / c.Tc()) << ',' << num(t.se) << ",\n";
            } catch (const std::exception& e) {
                failed = true;
                out << ",,," << csv_field(e.what()) << '\n';
            }
        }
    }
    return failed;
}

bool cmd_free_energy_scan(const Options& o, std::ostream& out) {
    const SystemConfig cfg = base_config(o, o.tau);
    const Detector det = parse_detector(o.detector);
    if (o.points < 2) throw ConfigError("points", "points must be at least 2");
    if (!(o.kappa >= 0.0 && o.kappa <= 1.0)) throw ConfigError("kappa", "kappa must lie in [0, 1]");
    const TrainingSolution tr = solve_training(cfg, cfg.tau());
    const QuadratureSpec quad = eval_options(o).solver.quad;
    const double lo = std::log(cfg.N0()), hi = std::log(cfg.N0() + cfg.beta() * cfg.P());
    bool failed = false;
    out << "sigma2,rhs,residual,free_energy,error\n";
    for (int i = 0; i < o.points; ++i) {
        const double s = std::exp(lo + (hi - lo) * i / (o.points - 1));
        try {
            const double r = data_rhs(cfg, tr, o.kappa, det, s, quad);
            const double f = candidate_free_energy(cfg, tr, o.kappa, s, quad);
            out << num(s) << ',' << num(r) << ',' << num(r - s) << ',' << num(f) << ",\n";
        } catch (const std::exception& e) {
            failed = true;
            out << num(s) << ",,,," << csv_field(e.what()) << '\n';
        }
    }
    return failed;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Large-system spectral efficiency of MIMO DS-CDMA receivers with pilot-based channel estimation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::map<std::string, Command> cmds;
    auto make = [&](const std::string& name, const std::string& desc) -> Command& {
        Command& c = cmds[name];
        c.app = app.add_subcommand(name, desc);
        c.app->add_option("--config", o.config, "key=value or JSON file; command-line flags win");
        c.app->add_option("--out", o.out, "output file (stdout if omitted); a manifest is written next to it");
        c.add("snr-db", o.snr_db, "P/N0 in dB");
        c.add("m", o.m, "transmit antennas per user");
        c.add("n", o.n, "receive antennas");
        c.add("power", o.power, "per-user symbol power P");
        c.add("tc", o.tc, "coherence time in symbol periods");
        c.add("quad-nodes", o.quad_nodes, "Gauss-Laguerre/Hermite node count");
        c.add("max-iters", o.max_iters, "fixed-point iteration cap per seed");
        return c;
    };

    Command& sweep = make("sweep-tau", "spectral efficiency versus pilot length");
    sweep.add("beta", o.beta, "system load K/L");
    sweep.add("tau-range", o.tau_range, "inclusive a:b (default 0:Tc)");
    sweep.add("receivers", o.receivers, "comma list of joint,one-shot,separated,lmmse,perfect");
    sweep.add("kappa-nodes", o.kappa_nodes, "Gauss-Legendre nodes for the kappa integral");

    Command& fixed = make("fixed-point", "data-phase fixed-point candidates as JSON");
    fixed.add("beta", o.beta, "system load K/L");
    fixed.add("tau", o.tau, "pilot periods");
    fixed.add("kappa", o.kappa, "fraction of decoded users in [0,1]");
    fixed.add("detector", o.detector, "optimal or lmmse");

    Command& simulate = make("simulate-ser", "finite-size Monte Carlo SER of the LMMSE receiver");
    simulate.add("k", o.k, "users K");
    simulate.add("l", o.l, "spreading factor L");
    simulate.add("tau", o.tau, "pilot periods");
    simulate.add("snr-grid", o.snr_grid, "start:step:stop or comma list, in dB");
    simulate.add("trials", o.trials, "coherence blocks per SNR point");
    simulate.add("seed", o.seed, "RNG seed");
    simulate.add("spreading", o.spreading, "qpsk or gaussian");

    Command& optimize = make("optimize-tau", "optimal pilot length versus antenna count (M = N)");
    optimize.add("beta", o.beta, "system load K/L");
    optimize.add("antennas", o.antennas, "comma list of M = N values");
    optimize.add("receivers", o.receivers, "comma list of receivers");
    optimize.add("kappa-nodes", o.kappa_nodes, "Gauss-Legendre nodes for the kappa integral");

    Command& scan = make("free-energy-scan", "fixed-point map and free energy over a sigma2 grid");
    scan.add("beta", o.beta, "system load K/L");
    scan.add("tau", o.tau, "pilot periods");
    scan.add("kappa", o.kappa, "fraction of decoded users in [0,1]");
    scan.add("detector", o.detector, "optimal or lmmse");
    scan.add("points", o.points, "grid points between N0 and N0 + beta*P");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    std::string name;
    for (auto& [n, c] : cmds)
        if (c.app->parsed()) name = n;
    Command& cmd = cmds.at(name);

    const auto start = std::chrono::steady_clock::now();
    bool failed = false;
    std::ostringstream body;
    try {
        if (!o.config.empty()) apply_config(cmd.app, o.config);
        if (name == "sweep-tau") failed = cmd_sweep_tau(o, body);
        else if (name == "fixed-point") failed = cmd_fixed_point(o, body);
        else if (name == "simulate-ser") failed = cmd_simulate_ser(o, body);
        else if (name == "optimize-tau") failed = cmd_optimize_tau(o, body);
        else failed = cmd_free_energy_scan(o, body);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (o.out.empty()) {
        out << body.str();
    } else {
        std::ofstream f(o.out, std::ios::binary);
        f << body.str();
        if (!f) {
            err << "error: cannot write '" << o.out << "'\n";
            return 2;
        }
        json manifest{{"command", name},
                      {"parameters", cmd.resolved()},
                      {"version", kVersion},
                      {"seed", o.seed},
                      {"duration_s", seconds},
                      {"output", o.out}};
        std::ofstream m(o.out + ".manifest.json");
        m << manifest.dump(2) << '\n';
    }
    return failed ? 1 : 0;
}

} // namespace replica_cdma::cli
