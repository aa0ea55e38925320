#pragma once

#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "curvcrit/config.hpp"
#include "curvcrit/io.hpp"
#include "curvcrit/params.hpp"
#include "curvcrit/solver.hpp"
#include "curvcrit/thresholds.hpp"
#include "curvcrit/verify.hpp"

namespace curvcrit::cli {

/// Worker budget: hardware threads, capped by CURVCRIT_THREADS when set.
inline int resolve_threads() {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CURVCRIT_THREADS")) {
        const unsigned long long cap = parse_uint(env, "CURVCRIT_THREADS");
        if (cap < 1) throw ConfigError("CURVCRIT_THREADS must be >= 1");
        return static_cast<int>(std::min<unsigned long long>(cap, hw));
    }
    return static_cast<int>(hw);
}

/// One fully resolved run: validated config, problem, Sobolev estimates, and
/// thresholds at the operative lambda (cfg.lambda, or cfg.lambda_max for
/// sweeps). Auto lambda (= 0) resolves to lambda_star/4.
struct Instance {
    RunConfig cfg;
    ProblemParams p;
    SobolevEstimates est;
    Thresholds th;
};

inline Instance prepare(RunConfig cfg, bool use_lambda_max) {
    validate_config(cfg);
    const DomainSpec dom = make_domain(cfg.N, cfg.resolved_lengths(), cfg.n);
    ProblemParams p = make_problem(dom, cfg.q, 0.0, cfg.r, cfg.delta);
    SobolevOptions sop;
    sop.starts = cfg.sobolev_starts;
    sop.max_iter = cfg.sobolev_max_iter;
    sop.seed = cfg.seed;
    const SobolevEstimates est = estimate_sobolev_constants(dom, cfg.q, sop);
    double& target = use_lambda_max ? cfg.lambda_max : cfg.lambda;
    if (target == 0.0) {
        const Thresholds th0 = assemble_thresholds(p, est.S, est.Sq);
        target = th0.lambda_star / 4.0;
    }
    p.lambda = target;
    const Thresholds th = assemble_thresholds(p, est.S, est.Sq);
    return Instance{std::move(cfg), std::move(p), est, th};
}

inline std::string thresholds_csv(const Instance& inst) {
    std::string s = "N,q,r,delta,K0,S,Sq,lambda,R0,R1,tau1,tau2,lambda_star,ps_bound\n";
    s += std::to_string(inst.p.N) + "," + fmt17(inst.p.q) + "," + fmt17(inst.p.coeff.r) + "," +
         fmt17(inst.p.coeff.delta) + "," + fmt17(inst.p.coeff.K0) + "," + fmt17(inst.th.S) + "," +
         fmt17(inst.th.Sq) + "," + fmt17(inst.p.lambda) + "," + fmt17(inst.th.R0) + "," +
         fmt17(inst.th.R1) + "," + fmt17(inst.th.tau1) + "," + fmt17(inst.th.tau2) + "," +
         fmt17(inst.th.lambda_star) + "," + fmt17(inst.th.ps_bound) + "\n";
    return s;
}

inline MultistartOptions multistart_options(const RunConfig& cfg) {
    MultistartOptions mop;
    mop.descent.tol = cfg.tol;
    mop.descent.max_iter = cfg.max_iter;
    mop.seeds_per_sphere = cfg.seeds_per_sphere;
    mop.dedup_tol = cfg.dedup_tol;
    mop.threads = resolve_threads();
    mop.seed = cfg.seed;
    return mop;
}

inline std::string field_name(const std::string& prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03zu.field", prefix.c_str(), i);
    return buf;
}

inline std::string measured_cell(const CheckResult& c) {
    std::string s;
    for (std::size_t i = 0; i < c.measured.size(); ++i) {
        if (i) s += ";";
        s += c.measured[i].first + "=" + fmt17(c.measured[i].second);
    }
    return s;
}

inline int cmd_thresholds(const RunConfig& cfg, std::ostream& out) {
    const Instance inst = prepare(cfg, false);
    out << thresholds_csv(inst);
    return 0;
}

inline void guard_lambda(double lambda, double lstar) {
    if (!(lambda > 0.0))
        throw ConfigError("resolved lambda must be positive");
    if (!(lambda < lstar))
        throw LambdaOutOfRange("lambda = " + fmt17(lambda) +
                               " is not below lambda_star = " + fmt17(lstar));
}

inline int cmd_solve(const RunConfig& cfg_in, std::ostream& out) {
    const Instance inst = prepare(cfg_in, false);
    guard_lambda(inst.p.lambda, inst.th.lambda_star);

    const SolutionSet set = find_multiple(inst.cfg.k, inst.p, inst.th, multistart_options(inst.cfg));

    namespace fs = std::filesystem;
    fs::create_directories(inst.cfg.out);
    write_text_file(inst.cfg.out + "/config.out", serialize_config(inst.cfg));
    write_text_file(inst.cfg.out + "/thresholds.csv", thresholds_csv(inst));

    std::string csv = "index,lambda,level,I,norm_sq,phi,residual,h1,linf,supgrad,ratio,iterations,field\n";
    bool all_pass = true;
    for (std::size_t i = 0; i < set.records.size(); ++i) {
        const SolutionRecord& rec = set.records[i];
        const std::string fname = field_name("u", i);
        write_field(inst.cfg.out + "/" + fname, rec.u);
        const double h1 = std::sqrt(rec.report.norm_sq);
        const double li = linf_norm(rec.u);
        const double sg = sup_grad(rec.u);
        csv += std::to_string(i + 1) + "," + fmt17(rec.lambda) + "," + fmt17(rec.level) + "," +
               fmt17(rec.report.I) + "," + fmt17(rec.report.norm_sq) + "," + fmt17(rec.report.phi) +
               "," + fmt17(rec.report.residual_norm) + "," + fmt17(h1) + "," + fmt17(li) + "," +
               fmt17(sg) + "," + fmt17(li / h1) + "," + std::to_string(rec.iterations) + "," +
               fname + "\n";
        const CheckResult chain = check_negative_level(rec, inst.th);
        if (!chain.pass) {
            all_pass = false;
            out << "record " << (i + 1) << " failed negative_level: " << chain.detail << "\n";
        }
    }
    write_text_file(inst.cfg.out + "/records.csv", csv);
    out << "found " << set.records.size() << " distinct sign-pairs at lambda = "
        << fmt17(inst.p.lambda) << " (lambda_star = " << fmt17(inst.th.lambda_star) << ")\n";
    out << "wrote " << inst.cfg.out << "/records.csv\n";
    return all_pass ? 0 : 1;
}

inline int cmd_sweep(const RunConfig& cfg_in, std::ostream& out) {
    const Instance inst = prepare(cfg_in, true);
    guard_lambda(inst.p.lambda, inst.th.lambda_star);

    std::vector<double> lambdas;
    double lam = inst.cfg.lambda_max;
    for (int j = 0; j < inst.cfg.steps; ++j) {
        lambdas.push_back(lam);
        lam /= inst.cfg.factor;
    }
    const std::vector<SweepPoint> points =
        lambda_sweep(lambdas, inst.p, inst.est.S, inst.est.Sq, multistart_options(inst.cfg));

    namespace fs = std::filesystem;
    fs::create_directories(inst.cfg.out);
    write_text_file(inst.cfg.out + "/config.out", serialize_config(inst.cfg));
    write_text_file(inst.cfg.out + "/thresholds.csv", thresholds_csv(inst));

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::string csv = "lambda,h1,linf,supgrad,ratio,J,residual,R0\n";
    bool all_ok = true;
    for (std::size_t j = 0; j < points.size(); ++j) {
        const SweepPoint& pt = points[j];
        if (pt.rec) {
            const SolutionRecord& rec = *pt.rec;
            const double h1 = std::sqrt(rec.report.norm_sq);
            const double li = linf_norm(rec.u);
            const double sg = sup_grad(rec.u);
            csv += fmt17(pt.lambda) + "," + fmt17(h1) + "," + fmt17(li) + "," + fmt17(sg) + "," +
                   fmt17(li / h1) + "," + fmt17(rec.level) + "," +
                   fmt17(rec.report.residual_norm) + "," + fmt17(pt.th.R0) + "\n";
            write_field(inst.cfg.out + "/" + field_name("sweep", j), rec.u);
        } else {
            all_ok = false;
            csv += fmt17(pt.lambda) + "," + fmt17(nan) + "," + fmt17(nan) + "," + fmt17(nan)                 + "," + fmt17(nan) + "," + fmt17(nan) + "," + fmt17(nan) + "," + fmt17(pt.th.R0) + "\n";
            out << "sweep step " << j << " (lambda = " << fmt17(pt.lambda)
                << ") failed: " << pt.error << "\n";
        }
    }
    write_text_file(inst.cfg.out + "/sweep.csv", csv);
    out << "swept " << points.size() << " lambda values down from " << fmt17(inst.cfg.lambda_max)
        << "\n";
    out << "wrote " << inst.cfg.out << "/sweep.csv\n";
    return all_ok ? 0 : 1;
}

inline int cmd_verify(const std::string& in_dir, std::ostream& out) {
    namespace fs = std::filesystem;
    const RunConfig cfg = parse_config(read_text_file(in_dir + "/config.out"));
    validate_config(cfg);
    const DomainSpec dom = make_domain(cfg.N, cfg.resolved_lengths(), cfg.n);
    const ProblemParams base = make_problem(dom, cfg.q, 0.0, cfg.r, cfg.delta);

    const CsvTable tcsv = read_csv(in_dir + "/thresholds.csv");
    const double S = parse_double(tcsv.rows.at(0).at(static_cast<std::size_t>(tcsv.column("S"))), "S");
    const double Sq = parse_double(tcsv.rows.at(0).at(static_cast<std::size_t>(tcsv.column("Sq"))), "Sq");

    std::vector<CheckResult> results;

    const auto load_record = [&](const std::string& fname, double lambda, ProblemParams& p_out,
                                 Thresholds& th_out) {
        p_out = base;
        p_out.lambda = lambda;
        th_out = assemble_thresholds(p_out, S, Sq);
        SolutionRecord rec;
        rec.u = read_field(in_dir + "/" + fname);
        if (!(rec.u.spec == dom)) throw IOError("field grid mismatch: " + fname);
        rec.lambda = lambda;
        rec.report = energy_report(rec.u, p_out, th_out);
        rec.level = rec.report.J;
        return rec;
    };

    if (fs::exists(in_dir + "/records.csv")) {
        const CsvTable rcsv = read_csv(in_dir + "/records.csv");
        const auto c_lambda = static_cast<std::size_t>(rcsv.column("lambda"));
        const auto c_field = static_cast<std::size_t>(rcsv.column("field"));
        std::vector<SolutionRecord> recs;
        for (std::size_t i = 0; i < rcsv.rows.size(); ++i) {
            const double lambda = parse_double(rcsv.rows[i][c_lambda], "lambda");
            ProblemParams p;
            Thresholds th;
            SolutionRecord rec = load_record(rcsv.rows[i][c_field], lambda, p, th);
            const std::string subject = "record[" + std::to_string(i + 1) + "]";
            CheckResult a = check_negative_level(rec, th);
            a.subject = subject;
            results.push_back(std::move(a));
            CheckResult b = check_recovery(rec, p, cfg.tol);
            b.subject = subject;
            results.push_back(std::move(b));
            recs.push_back(std::move(rec));
        }
        if (recs.size() >= 3) {
            CheckResult c = check_ratio_bound(recs);
            c.subject = "records";
            results.push_back(std::move(c));
        }
    }

    if (fs::exists(in_dir + "/sweep.csv")) {
        const CsvTable scsv = read_csv(in_dir + "/sweep.csv");
        const auto c_lambda = static_cast<std::size_t>(scsv.column("lambda"));
        std::vector<SolutionRecord> recs;
        std::vector<double> R0s;
        std::size_t skipped = 0;
        for (std::size_t j = 0; j < scsv.rows.size(); ++j) {
            const std::string fname = field_name("sweep", j);
            if (!fs::exists(in_dir + "/" + fname)) {
                ++skipped;
                continue;
            }
            const double lambda = parse_double(scsv.rows[j][c_lambda], "lambda");
            ProblemParams p;
            Thresholds th;
            SolutionRecord rec = load_record(fname, lambda, p, th);
            const std::string subject = "sweep[" + std::to_string(j) + "]";
            CheckResult a = check_negative_level(rec, th);
            a.subject = subject;
            results.push_back(std::move(a));
            CheckResult b = check_recovery(rec, p, cfg.tol);
            b.subject = subject;
            results.push_back(std::move(b));
            recs.push_back(std::move(rec));
            R0s.push_back(th.R0);
        }
        if (skipped > 0) {
            CheckResult note;
            note.check = "inputs";
            note.subject = "sweep";
            note.pass = true;
            note.detail = std::to_string(skipped) + " failed sweep rows skipped";
            results.push_back(std::move(note));
        }
        if (!recs.empty()) {
            CheckResult c = check_ratio_bound(recs);
            c.subject = "sweep";
            results.push_back(std::move(c));
            CheckResult d = check_decay(recs, R0s);
            d.subject = "sweep";
            results.push_back(std::move(d));
            CheckResult e = check_integrability(recs, base.two_star);
            e.subject = "sweep";
            results.push_back(std::move(e));
            const double lhat = recovery_threshold(recs, base, cfg.tol);
            out << "recovery threshold lambda-hat = " << fmt17(lhat) << "\n";
        }
    }

    if (results.empty()) throw IOError("no records.csv or sweep.csv in " + in_dir);

    std::string csv = "check,subject,pass,detail,measured\n";
    bool all_pass = true;
    for (const CheckResult& c : results) {
        csv += c.check + "," + c.subject + "," + (c.pass ? "1" : "0") + "," + c.detail + "," +
               measured_cell(c) + "\n";
        out << (c.pass ? "PASS " : "FAIL ") << c.check << " " << c.subject;
        if (!c.pass) out << " (" << c.detail << ")";
        out << "\n";
        if (!c.pass) all_pass = false;
    }
    write_text_file(in_dir + "/verify.csv", csv);
    return all_pass ? 0 : 1;
}

/// Entry point shared by the binary and the tests. Returns the process exit
/// code: 0 ok, 1 check/convergence failure, 2 configuration or input error.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"critical-growth mean-curvature solver"};
    app.name("curvcrit");
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key=value config file")->expected(1);

    auto* th_cmd = app.add_subcommand("thresholds", "print the constant pipeline as one CSV row");

    auto* so_cmd = app.add_subcommand("solve", "multistart search at one lambda");
    double so_lambda = 0.0, so_tol = 0.0;
    int so_k = 0, so_n = 0;
    std::string so_out;
    so_cmd->add_option("--lambda", so_lambda, "parameter lambda (0 = lambda_star/4)");
    so_cmd->add_option("--k", so_k, "number of sphere families");
    so_cmd->add_option("--n", so_n, "interior grid points per axis");
    so_cmd->add_option("--tol", so_tol, "residual tolerance");
    so_cmd->add_option("--out", so_out, "output directory");

    auto* sw_cmd = app.add_subcommand("sweep", "warm-started decreasing-lambda sweep");
    double sw_lambda_max = 0.0, sw_factor = 0.0;
    int sw_steps = 0;
    std::string sw_out;
    sw_cmd->add_option("--lambda-max", sw_lambda_max, "largest lambda (0 = lambda_star/4)");
    sw_cmd->add_option("--factor", sw_factor, "per-step division factor");
    sw_cmd->add_option("--steps", sw_steps, "number of sweep points");
    sw_cmd->add_option("--out", sw_out, "output directory");

    auto* ve_cmd = app.add_subcommand("verify", "re-check a solve/sweep output directory");
    std::string ve_in;
    ve_cmd->add_option("--in", ve_in, "directory to verify")->required();

    std::vector<const char*> argv;
    argv.push_back("curvcrit");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = parse_config(read_text_file(config_path));
        if (th_cmd->parsed()) return cmd_thresholds(cfg, out);
        if (so_cmd->parsed()) {
            if (so_cmd->count("--lambda")) cfg.lambda = so_lambda;
            if (so_cmd->count("--k")) cfg.k = so_k;
            if (so_cmd->count("--n")) cfg.n = so_n;
            if (so_cmd->count("--tol")) cfg.tol = so_tol;
            if (so_cmd->count("--out")) cfg.out = so_out;
            return cmd_solve(cfg, out);
        }
        if (sw_cmd->parsed()) {
            if (sw_cmd->count("--lambda-max")) cfg.lambda_max = sw_lambda_max;
            if (sw_cmd->count("--factor")) cfg.factor = sw_factor;
            if (sw_cmd->count("--steps")) cfg.steps = sw_steps;
            if (sw_cmd->count("--out")) cfg.out = sw_out;
            return cmd_sweep(cfg, out);
        }
        if (ve_cmd->parsed()) return cmd_verify(ve_in, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const LambdaOutOfRange& e) {
        err << "lambda out of range: " << e.what() << "\n";
        return 2;
    } catch (const IOError& e) {
        err << "input error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "failure: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace curvcrit::cli
