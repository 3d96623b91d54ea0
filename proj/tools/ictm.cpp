// ictm: command-line front end for reconstruction, segmentation and verification runs.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ictm.hpp"
#include "ictm/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_internal = 1;
constexpr int exit_input = 2;
constexpr int exit_no_convergence = 3;

struct ReconstructArgs {
    std::string cloud;
    std::string generator;
    std::size_t points = 200;
    std::size_t grid = 256;
    double tau = 5e-4;
    std::string alpha_u = "inf";
    double exponent = 1.0;
    int max_iter = 300;
    std::string out_dir = "out";
};

struct SegmentArgs {
    std::string model;
    std::string image;
    std::size_t n = 2;
    std::optional<double> lambda;
    std::optional<double> mu;
    std::optional<double> tau;
    std::optional<double> sigma;
    std::optional<double> epsilon;
    std::vector<std::string> init;
    std::string preset;
    std::string order;
    double tol = 1e-8;
    int max_iter = 300;
    std::string out_dir = "out";
};

struct VerifyArgs {
    std::string suite;
    std::size_t n = 2;
    std::size_t p = 4;
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    std::string out_dir;
};

json thread_setting() {
    const char* env = std::getenv("ICTM_THREADS");
    return env ? json(env) : json(nullptr);
}

std::optional<double> parse_alpha(const std::string& text) {
    if (text == "inf" || text == "infinity") return std::nullopt;
    double v = 0.0;
    std::size_t used = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || !(v > 0.0) || !std::isfinite(v)) {
        throw ictm::ConfigError("--alpha-u must be a positive number or 'inf', got '" + text + "'");
    }
    return v;
}

// "rect:x,y,w,h" or "disk:cx,cy,r"; W and H stand for the image width and height.
ictm::InitRegion parse_region(const std::string& text, std::size_t width, std::size_t height) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ictm::ConfigError("--init expects rect:x,y,w,h or disk:cx,cy,r");
    const std::string shape = text.substr(0, colon);
    std::vector<double> v;
    std::stringstream fields(text.substr(colon + 1));
    std::string item;
    while (std::getline(fields, item, ',')) {
        if (item == "W") {
            v.push_back(static_cast<double>(width));
            continue;
        }
        if (item == "H") {
            v.push_back(static_cast<double>(height));
            continue;
        }
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw ictm::ConfigError("bad number '" + item + "' in --init " + text);
        v.push_back(x);
    }
    if (shape == "rect" && v.size() == 4) return ictm::InitRegion::rect(v[0], v[1], v[2], v[3]);
    if (shape == "disk" && v.size() == 3) return ictm::InitRegion::disk(v[0], v[1], v[2]);
    throw ictm::ConfigError("--init expects rect:x,y,w,h or disk:cx,cy,r, got '" + text + "'");
}

// n-1 vertical strips over the middle half of the frame; the last phase takes the rest.
std::vector<ictm::InitRegion> default_regions(std::size_t n, std::size_t width, std::size_t height) {
    const double W = static_cast<double>(width), H = static_cast<double>(height);
    if (n == 2) return {ictm::InitRegion::rect(std::floor(W / 4), std::floor(H / 4), std::floor(W / 2), std::floor(H / 2))};
    std::vector<ictm::InitRegion> regions;
    const double strip = std::floor(W / 2 / static_cast<double>(n - 1));
    if (strip < 1.0) throw ictm::ConfigError("image too narrow for the default initialization; pass --init");
    for (std::size_t k = 0; k + 1 < n; ++k) {
        regions.push_back(ictm::InitRegion::rect(std::floor(W / 4) + strip * static_cast<double>(k), std::floor(H / 4),
                                                 strip, std::floor(H / 2)));
    }
    return regions;
}

json result_json(const ictm::SolveResult<ictm::IndicatorField>& result) {
    return {{"iterations", result.iterations},
            {"converged", result.converged},
            {"final_energy", result.trace.final_energy()}};
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path out(dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ictm::IoError("cannot create output directory '" + dir + "': " + ec.message());
    return out;
}

int finish(ictm::io::RunManifest& manifest, const fs::path& path,
           const ictm::SolveResult<ictm::IndicatorField>& result) {
    manifest.status = result.converged ? "converged" : "max_iter_reached";
    manifest.result = result_json(result);
    manifest.write(path.string());
    std::cerr << manifest.subcommand << ": " << manifest.status << " after " << result.iterations
              << " iterations, energy " << ictm::io::format_double(result.trace.final_energy()) << '\n';
    return result.converged ? exit_ok : exit_no_convergence;
}

int run_reconstruct(const ReconstructArgs& args) {
    // Inputs are validated before anything is written.
    const auto alpha = parse_alpha(args.alpha_u);
    if (args.max_iter < 1) throw ictm::ConfigError("--max-iter must be positive");
    if (!(args.tau > 0.0)) throw ictm::ConfigError("--tau must be positive");
    ictm::PointCloud raw;
    if (!args.cloud.empty()) {
        raw = ictm::io::read_cloud(args.cloud);
    } else if (args.generator == "flower") {
        raw = ictm::generate_flower(args.points);
    } else if (args.generator == "circle") {
        raw = ictm::generate_flower(args.points, 5, 0.0);
    } else {
        throw ictm::ConfigError("unknown generator '" + args.generator + "' (expected flower or circle)");
    }
    const std::vector<std::size_t> sizes(raw.dim, args.grid);
    const ictm::Grid grid = ictm::build_grid(raw.dim, sizes, std::vector<double>(raw.dim, 1.0));
    const auto cloud = ictm::normalize_cloud(raw, grid);
    const auto d = ictm::distance_field(cloud, grid, args.exponent);
    const ictm::KernelOperator kernel(grid, args.tau);

    const fs::path out = prepare_out_dir(args.out_dir);
    ictm::io::RunManifest manifest;
    manifest.subcommand = "reconstruct";
    manifest.parameters = {{"grid", args.grid},         {"dims", raw.dim},
                           {"tau", args.tau},           {"alpha_u", alpha ? json(*alpha) : json("inf")},
                           {"exponent", args.exponent}, {"max_iter", args.max_iter},
                           {"points", cloud.size()},    {"normalize_fraction", 0.7},
                           {"init", "disk r=0.8*min half-extent"}, {"threads", thread_setting()}};
    manifest.inputs = args.cloud.empty() ? json{{"generator", args.generator}} : json{{"cloud", args.cloud}};
    const bool planar = raw.dim == 2;
    manifest.outputs = {{"trace", "energy.csv"}};
    if (planar) {
        manifest.outputs["indicator"] = "indicator.pgm";
    } else {
        manifest.outputs["indicator"] = "indicator.raw";
        manifest.outputs["sidecar"] = "indicator.json";
    }
    const fs::path manifest_path = out / "manifest.json";
    manifest.write(manifest_path.string());

    ictm::IscConfig config;
    config.alpha_u = alpha;
    config.max_iter = args.max_iter;
    const auto result = ictm::run_isc(d, kernel, ictm::init_disk(grid), config);

    ictm::io::write_trace_csv((out / "energy.csv").string(), result.trace);
    if (planar) {
        ictm::io::write_indicator_pgm((out / "indicator.pgm").string(), result.u, 1, grid.size(1), grid.size(0));
    } else {
        const auto inside = result.u.row(1);
        ictm::io::write_volume((out / "indicator.raw").string(), (out / "indicator.json").string(), grid, inside);
    }
    return finish(manifest, manifest_path, result);
}

int run_segment(const SegmentArgs& args) {
    if (args.model != "cv" && args.model != "lif") {
        throw ictm::ConfigError("--model must be cv or lif, got '" + args.model + "'");
    }
    const bool lif = args.model == "lif";
    if (lif && args.n != 2) throw ictm::ConfigError("the lif model is two-phase; --n must be 2");
    if (args.n < 2) throw ictm::ConfigError("--n must be at least 2");
    if (!lif && (args.mu || args.sigma || args.epsilon || !args.preset.empty())) {
        throw ictm::ConfigError("--mu, --sigma, --epsilon and --preset apply to the lif model only");
    }
    if (args.max_iter < 1) throw ictm::ConfigError("--max-iter must be positive");
    if (!(args.tol >= 0.0)) throw ictm::ConfigError("--tol must be nonnegative");

    const ictm::Image image = ictm::io::read_image(args.image);
    std::vector<ictm::InitRegion> regions;
    for (const auto& text : args.init) regions.push_back(parse_region(text, image.width(), image.height()));
    if (regions.empty()) regions = default_regions(args.n, image.width(), image.height());
    const auto u0 = ictm::init_mask(regions, args.n, image.width(), image.height());

    ictm::SolverConfig config;
    config.max_iter = args.max_iter;
    config.max_inner = 1;
    config.tol_theta = args.tol;
    if (args.order == "u-first") {
        config.order = ictm::UpdateOrder::u_first;
    } else if (args.order == "theta-first") {
        config.order = ictm::UpdateOrder::theta_first;
    } else if (args.order.empty()) {
        config.order = lif ? ictm::UpdateOrder::theta_first : ictm::UpdateOrder::u_first;
    } else {
        throw ictm::ConfigError("--order must be u-first or theta-first");
    }

    json parameters = {{"model", args.model},
                       {"n", args.n},
                       {"order", config.order == ictm::UpdateOrder::u_first ? "u-first" : "theta-first"},
                       {"tol", args.tol},
                       {"max_iter", args.max_iter},
                       {"max_inner", config.max_inner},
                       {"init", args.init.empty() ? json("default") : json(args.init)},
                       {"threads", thread_setting()}};
    std::optional<ictm::ChanVeseProblem> cv;
    std::optional<ictm::LifProblem> lif_problem;
    if (lif) {
        ictm::LifParameters p = args.preset.empty() ? ictm::LifParameters{} : ictm::lif_preset(args.preset);
        if (args.tau) p.tau = *args.tau;
        if (args.lambda) p.lambda = *args.lambda;
        if (args.mu) p.mu = *args.mu;
        if (args.sigma) p.sigma = *args.sigma;
        if (args.epsilon) p.epsilon = *args.epsilon;
        if (!(p.tau > 0.0) || !(p.sigma > 0.0)) throw ictm::ConfigError("--tau and --sigma must be positive");
        parameters.update({{"preset", args.preset.empty() ? json(nullptr) : json(args.preset)},
                           {"tau", p.tau},
                           {"lambda", p.lambda},
                           {"mu", p.mu},
                           {"sigma", p.sigma},
                           {"epsilon", p.epsilon}});
        lif_problem.emplace(image, p);
    } else {
        const double lambda = args.lambda.value_or(image.channels() == 3 ? 0.1 : 0.03);
        const double tau = args.tau.value_or(1.0);
        if (!(tau > 0.0)) throw ictm::ConfigError("--tau must be positive");
        parameters.update({{"tau", tau}, {"lambda", lambda}});
        cv.emplace(image, args.n, lambda, tau);
    }

    const fs::path out = prepare_out_dir(args.out_dir);
    ictm::io::RunManifest manifest;
    manifest.subcommand = "segment";
    manifest.parameters = std::move(parameters);
    manifest.inputs = {{"image", args.image}, {"width", image.width()}, {"height", image.height()},
                       {"channels", image.channels()}};
    manifest.outputs = {{"mask", "mask.png"}, {"overlay", "overlay.png"}, {"trace", "energy.csv"}};
    const fs::path manifest_path = out / "manifest.json";
    manifest.write(manifest_path.string());

    const auto result = lif ? ictm::run_alternating(*lif_problem, u0, lif_problem->solve_theta(u0, {}), config)
                            : ictm::run_alternating(*cv, u0, cv->initial_theta(), config);

    ictm::io::write_trace_csv((out / "energy.csv").string(), result.trace);
    ictm::io::write_mask_png((out / "mask.png").string(), result.u, image.width(), image.height());
    ictm::io::write_png((out / "overlay.png").string(), ictm::io::render_overlay(image, result.u));
    return finish(manifest, manifest_path, result);
}

ictm::ParameterState random_theta(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    ictm::ParameterState theta(n);
    for (double& t : theta) t = dist(rng);
    return theta;
}

ictm::IndicatorField random_assignment(std::size_t n, std::size_t p, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint32_t> dist(0, static_cast<std::uint32_t>(n - 1));
    std::vector<std::uint32_t> labels(p);
    for (auto& l : labels) l = dist(rng);
    return ictm::IndicatorField(n, labels);
}

ictm::CertificateReport equivalence_report(const ictm::DenseProblem& problem, std::mt19937_64& rng) {
    const auto u = random_assignment(problem.phases(), problem.points(), rng);
    const auto theta = random_theta(problem.phases(), rng);
    const auto threshold = ictm::u_update_threshold(problem, u, theta);
    const auto pg = ictm::u_update_pg(problem, u, theta, 1e6);
    ictm::CertificateReport report{"threshold_pg_equivalence",
                                   "n=" + std::to_string(problem.phases()) + " p=" + std::to_string(problem.points()),
                                   ictm::CertificateStatus::pass, std::nullopt, 1};
    if (!(threshold == pg)) {
        report.status = ictm::CertificateStatus::fail;
        report.witness = ictm::Witness{{u.dense(), threshold.dense(), pg.dense()}, 1e6, {}, "PG differs from threshold"};
    }
    return report;
}

ictm::CertificateReport local_min_report(const ictm::DenseProblem& problem, std::mt19937_64& rng) {
    ictm::SolverConfig config;
    config.local_search_radius = 1;
    config.max_iter = 1000;
    const auto u0 = random_assignment(problem.phases(), problem.points(), rng);
    const auto result = ictm::run_alternating(problem, u0, random_theta(problem.phases(), rng), config);
    auto report = ictm::local_min_certificate(problem, result.u, result.theta, 1);
    if (!result.converged && report.passed()) {
        report.status = ictm::CertificateStatus::fail;
        report.witness = ictm::Witness{{result.u.dense()}, std::nullopt, {}, "driver did not converge"};
    }
    return report;
}

int run_verify(const VerifyArgs& args) {
    if (args.suite != "exactness" && args.suite != "local-min" && args.suite != "equivalence") {
        throw ictm::ConfigError("--suite must be exactness, local-min or equivalence");
    }
    if (args.n < 2) throw ictm::ConfigError("--n must be at least 2");
    if (args.p < 1) throw ictm::ConfigError("--p must be positive");
    if (args.trials < 1) throw ictm::ConfigError("--trials must be positive");
    ictm::require_enumerable(args.n, args.p);

    std::optional<fs::path> out;
    std::ofstream log;
    if (!args.out_dir.empty()) {
        out = prepare_out_dir(args.out_dir);
        ictm::io::RunManifest manifest;
        manifest.subcommand = "verify";
        manifest.parameters = {{"suite", args.suite}, {"n", args.n}, {"p", args.p}, {"trials", args.trials},
                               {"threads", thread_setting()}};
        manifest.seed = args.seed;
        manifest.outputs = {{"report", "report.jsonl"}};
        manifest.write((*out / "manifest.json").string());
        log.open(*out / "report.jsonl");
        if (!log) throw ictm::IoError("cannot write report.jsonl");
    }

    std::size_t passed = 0;
    for (std::size_t t = 0; t < args.trials; ++t) {
        auto rng = ictm::detail::trial_rng(args.seed, t);
        const auto problem = ictm::DenseProblem::random(args.n, args.p, rng());
        ictm::CertificateReport report;
        if (args.suite == "exactness") {
            report = ictm::relaxation_exactness_check(problem, random_theta(args.n, rng), 10, rng());
        } else if (args.suite == "equivalence") {
            report = equivalence_report(problem, rng);
        } else {
            report = local_min_report(problem, rng);
        }
        report.instance += " trial=" + std::to_string(t);
        passed += report.passed();
        ictm::io::write_report_line(std::cout, report);
        if (log) ictm::io::write_report_line(log, report);
    }
    const bool all = passed == args.trials;
    std::cerr << "verify " << args.suite << ": " << passed << "/" << args.trials << " passed\n";
    if (out) {
        ictm::io::RunManifest manifest;
        manifest.subcommand = "verify";
        manifest.parameters = {{"suite", args.suite}, {"n", args.n}, {"p", args.p}, {"trials", args.trials},
                               {"threads", thread_setting()}};
        manifest.seed = args.seed;
        manifest.outputs = {{"report", "report.jsonl"}};
        manifest.status = all ? "pass" : "fail";
        manifest.result = {{"passed", passed}, {"trials", args.trials}};
        manifest.write((*out / "manifest.json").string());
    }
    return all ? exit_ok : exit_internal;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Iterative convolution-thresholding solvers: reconstruction, segmentation, verification"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ictm::version);

    ReconstructArgs rec;
    auto* reconstruct = app.add_subcommand("reconstruct", "Implicit curve/surface reconstruction from a point cloud");
    auto* cloud_opt = reconstruct->add_option("--cloud", rec.cloud, "Point cloud file (2 or 3 columns)");
    auto* gen_opt = reconstruct->add_option("--generator", rec.generator, "Built-in cloud: flower or circle");
    cloud_opt->excludes(gen_opt);
    reconstruct->add_option("--points", rec.points, "Generator point count")->capture_default_str();
    reconstruct->add_option("--grid", rec.grid, "Grid points per axis")->capture_default_str();
    reconstruct->add_option("--tau", rec.tau, "Kernel time parameter")->capture_default_str();
    reconstruct->add_option("--alpha-u", rec.alpha_u, "Assignment step size, or inf for thresholding")
        ->capture_default_str();
    reconstruct->add_option("--exponent", rec.exponent, "Distance exponent s in d^s")->capture_default_str();
    reconstruct->add_option("--max-iter", rec.max_iter, "Iteration limit")->capture_default_str();
    reconstruct->add_option("--out-dir", rec.out_dir, "Output directory")->capture_default_str();

    SegmentArgs seg;
    auto* segment = app.add_subcommand("segment", "Chan-Vese or local intensity fitting segmentation");
    segment->add_option("--model", seg.model, "cv or lif")->required();
    segment->add_option("--image", seg.image, "PNG, PGM or PPM image")->required();
    segment->add_option("--n", seg.n, "Number of phases")->capture_default_str();
    segment->add_option("--lambda", seg.lambda, "Perimeter weight (cv: 0.03 gray, 0.1 RGB)");
    segment->add_option("--mu", seg.mu, "Fidelity weight (lif)");
    segment->add_option("--tau", seg.tau, "Perimeter kernel time in pixel^2 (cv: 1)");
    segment->add_option("--sigma", seg.sigma, "Fitting kernel time in pixel^2 (lif)");
    segment->add_option("--epsilon", seg.epsilon, "Fit regularization (lif)");
    segment->add_option("--init", seg.init, "rect:x,y,w,h or disk:cx,cy,r; region k seeds phase k");
    segment->add_option("--preset", seg.preset, "lif parameter set p1 ... p5");
    segment->add_option("--order", seg.order, "u-first or theta-first (cv: u-first, lif: theta-first)");
    segment->add_option("--tol", seg.tol, "Parameter change tolerance")->capture_default_str();
    segment->add_option("--max-iter", seg.max_iter, "Outer iteration limit")->capture_default_str();
    segment->add_option("--out-dir", seg.out_dir, "Output directory")->capture_default_str();

    VerifyArgs ver;
    auto* verify = app.add_subcommand("verify", "Certificate suites on random small instances");
    verify->add_option("--suite", ver.suite, "exactness, local-min or equivalence")->required();
    verify->add_option("--n", ver.n, "Phases")->capture_default_str();
    verify->add_option("--p", ver.p, "Points")->capture_default_str();
    verify->add_option("--trials", ver.trials, "Number of instances")->capture_default_str();
    verify->add_option("--seed", ver.seed, "Base seed")->capture_default_str();
    verify->add_option("--out-dir", ver.out_dir, "Also write manifest.json and report.jsonl here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }

    try {
        if (*reconstruct) {
            if (rec.cloud.empty() && rec.generator.empty()) {
                throw ictm::ConfigError("reconstruct needs --cloud or --generator");
            }
            return run_reconstruct(rec);
        }
        if (*segment) return run_segment(seg);
        return run_verify(ver);
    } catch (const ictm::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const ictm::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const ictm::CapabilityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return exit_internal;
    }
}
