#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ictm.hpp"
#include "ictm/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path work = fs::path(ICTM_TEST_WORK_DIR);

int run(const std::string& args, const std::string& log = "") {
    std::string cmd = std::string(ICTM_CLI) + " " + args;
    cmd += log.empty() ? " >/dev/null 2>&1" : " >" + (work / log).string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

const fs::path& inputs() {
    static const fs::path dir = [] {
        const fs::path d = work / "in";
        const std::string cmd = std::string(ICTM_MAKE_INPUTS) + " " + d.string() + " 128 >/dev/null";
        if (std::system(cmd.c_str()) != 0) throw std::runtime_error("make_inputs failed");
        return d;
    }();
    return dir;
}

fs::path out(const std::string& name) {
    const fs::path d = work / name;
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ictm::EnergyTrace trace_of(const fs::path& dir) {
    std::ifstream in(dir / "energy.csv");
    return ictm::io::read_trace_csv(in);
}

}  // namespace

TEST_CASE("reconstruct writes indicator, trace and manifest", "[cli]") {
    const auto dir = out("rec_flower");
    REQUIRE(run("reconstruct --generator flower --grid 256 --tau 5e-4 --alpha-u inf --out-dir " + dir.string()) == 0);
    const auto manifest = ictm::io::read_manifest(dir / "manifest.json");
    CHECK(manifest["status"] == "converged");
    CHECK(manifest["result"]["iterations"].get<int>() < 100);
    CHECK(manifest["parameters"]["tau"] == 5e-4);
    const auto img = ictm::io::read_pnm((dir / "indicator.pgm").string());
    CHECK(img.width() == 256);
    CHECK(img.height() == 256);
    const auto trace = trace_of(dir);
    CHECK(trace.records.size() == manifest["result"]["iterations"].get<std::size_t>() + 1);
    CHECK(trace.monotone(1e-10));
    CHECK(trace.records.back().u_changes == 0);
}

TEST_CASE("reconstruct: larger step ends at lower energy", "[cli]") {
    const auto small = out("rec_a05"), large = out("rec_a8");
    REQUIRE(run("reconstruct --generator flower --tau 5e-4 --alpha-u 0.5 --out-dir " + small.string()) == 0);
    REQUIRE(run("reconstruct --generator flower --tau 5e-4 --alpha-u 8 --out-dir " + large.string()) == 0);
    CHECK(trace_of(large).final_energy() <= trace_of(small).final_energy());
}

TEST_CASE("reconstruct from a cloud file, 2-D and 3-D", "[cli]") {
    const auto dir = out("rec_file");
    REQUIRE(run("reconstruct --cloud " + (inputs() / "flower.xyz").string() + " --grid 128 --out-dir " + dir.string()) ==
            0);
    CHECK(fs::exists(dir / "indicator.pgm"));

    ictm::PointCloud sphere{3, {}};
    for (int a = 0; a < 24; ++a) {
        for (int b = 1; b < 12; ++b) {
            const double t = a * 2.0 * std::numbers::pi / 24, s = b * std::numbers::pi / 12;
            sphere.points.push_back({std::sin(s) * std::cos(t), std::sin(s) * std::sin(t), std::cos(s)});
        }
    }
    sphere.points.push_back({0, 0, 1});
    sphere.points.push_back({0, 0, -1});
    ictm::io::write_cloud((work / "sphere.xyz").string(), sphere);
    const auto vol = out("rec_3d");
    REQUIRE(run("reconstruct --cloud " + (work / "sphere.xyz").string() + " --grid 32 --tau 2e-3 --out-dir " +
                vol.string()) == 0);
    ictm::Grid grid;
    const auto values = ictm::io::read_volume((vol / "indicator.raw").string(), (vol / "indicator.json").string(), grid);
    CHECK(grid.sizes() == std::vector<std::size_t>{32, 32, 32});
    double inside = 0.0;
    for (double v : values) inside += v;
    CHECK(inside > 0.0);
    CHECK(values[grid.points() / 2 + 16 * 32 + 16] == 1.0);
}

TEST_CASE("reconstruct error paths", "[cli]") {
    const auto missing = out("rec_missing");
    CHECK(run("reconstruct --cloud /nonexistent/cloud.xyz --out-dir " + missing.string()) == 2);
    CHECK_FALSE(fs::exists(missing));
    CHECK(run("reconstruct --generator flower --alpha-u -1 --out-dir " + missing.string()) == 2);
    CHECK(run("reconstruct --generator spiral --out-dir " + missing.string()) == 2);
    CHECK(run("reconstruct --out-dir " + missing.string()) == 2);
    CHECK(run("reconstruct --generator flower --tau 0 --out-dir " + missing.string()) == 2);
    CHECK_FALSE(fs::exists(missing));

    const auto partial = out("rec_partial");
    CHECK(run("reconstruct --generator flower --max-iter 3 --out-dir " + partial.string()) == 3);
    CHECK(fs::exists(partial / "indicator.pgm"));
    CHECK(trace_of(partial).records.size() == 4);
    CHECK(ictm::io::read_manifest(partial / "manifest.json")["status"] == "max_iter_reached");
}

TEST_CASE("segment cv recovers a two-tone image", "[cli]") {
    const auto dir = out("seg_cv");
    REQUIRE(run("segment --model cv --lambda 0.03 --image " + (inputs() / "two_tone.pgm").string() + " --out-dir " +
                dir.string()) == 0);
    const auto manifest = ictm::io::read_manifest(dir / "manifest.json");
    CHECK(manifest["result"]["iterations"].get<int>() <= 40);
    std::size_t w = 0, h = 0;
    const auto labels = ictm::io::read_mask_png((dir / "mask.png").string(), w, h);
    const auto truth = ictm::io::read_pnm((inputs() / "truth.pgm").string());
    std::vector<std::uint8_t> mask(truth.pixels());
    for (std::size_t j = 0; j < mask.size(); ++j) mask[j] = truth(0, j) > 0.5;
    CHECK(ictm::synthetic::two_phase_accuracy(ictm::IndicatorField(2, labels), mask) == 1.0);
    CHECK(fs::exists(dir / "overlay.png"));
    CHECK(ictm::io::read_png((dir / "overlay.png").string()).channels() == 3);
    CHECK(trace_of(dir).monotone(1e-10));
}

TEST_CASE("segment options", "[cli]") {
    const std::string gray = (inputs() / "two_tone.pgm").string();
    const std::string inhom = (inputs() / "inhomogeneous.pgm").string();

    const auto p1 = out("seg_p1");
    CHECK(run("segment --model lif --preset p1 --max-iter 5 --image " + inhom + " --out-dir " + p1.string()) != 2);
    const auto m = ictm::io::read_manifest(p1 / "manifest.json");
    CHECK(m["parameters"]["tau"] == 5.0);
    CHECK(m["parameters"]["lambda"] == 1.0);
    CHECK(m["parameters"]["mu"] == 150.0);
    CHECK(m["parameters"]["sigma"] == 3.0);

    const auto full = out("seg_full");
    CHECK(run("segment --model cv --n 2 --init rect:0,0,W,H --image " + gray + " --out-dir " + full.string()) == 0);

    const auto rgb = out("seg_rgb");
    CHECK(run("segment --model cv --n 3 --image " + (inputs() / "two_tone_rgb.png").string() + " --out-dir " +
              rgb.string()) == 0);
    CHECK(ictm::io::read_manifest(rgb / "manifest.json")["parameters"]["lambda"] == 0.1);

    const auto bad = out("seg_bad");
    CHECK(run("segment --model lif --n 3 --image " + inhom + " --out-dir " + bad.string()) == 2);
    CHECK(run("segment --model cv --image /nonexistent.pgm --out-dir " + bad.string()) == 2);
    CHECK(run("segment --model cv --init rect:1,2 --image " + gray + " --out-dir " + bad.string()) == 2);
    CHECK(run("segment --model cv --init rect:0,0,500,5 --image " + gray + " --out-dir " + bad.string()) == 2);
    CHECK(run("segment --model kmeans --image " + gray + " --out-dir " + bad.string()) == 2);
    CHECK(run("segment --model lif --preset p9 --image " + inhom + " --out-dir " + bad.string()) == 2);
    CHECK(run("segment --model cv --mu 3 --image " + gray + " --out-dir " + bad.string()) == 2);
    CHECK_FALSE(fs::exists(bad));
}

TEST_CASE("verify suites emit JSON lines", "[cli]") {
    REQUIRE(run("verify --suite exactness --n 2 --p 4 --trials 100 --seed 7", "exactness.jsonl") == 0);
    std::ifstream in(work / "exactness.jsonl");
    std::string line;
    std::size_t count = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j["claim"] == "relaxation_exactness");
        CHECK(j["pass"] == true);
        ++count;
    }
    CHECK(count == 100);
    CHECK(run("verify --suite equivalence --n 3 --p 5 --trials 50 --seed 3") == 0);
    CHECK(run("verify --suite local-min --n 2 --p 6 --trials 20 --seed 3") == 0);
    CHECK(run("verify --suite exactness --n 3 --p 40") == 2);
    CHECK(run("verify --suite everything") == 2);
    CHECK(run("") == 2);
}

TEST_CASE("identical arguments give identical outputs", "[cli]") {
    const auto a = out("det_a"), b = out("det_b");
    REQUIRE(run("reconstruct --generator flower --grid 128 --tau 1e-3 --out-dir " + a.string()) == 0);
    REQUIRE(run("reconstruct --generator flower --grid 128 --tau 1e-3 --out-dir " + b.string()) == 0);
    CHECK(slurp(a / "energy.csv") == slurp(b / "energy.csv"));
    CHECK(slurp(a / "indicator.pgm") == slurp(b / "indicator.pgm"));

    const std::string noisy = (inputs() / "two_tone_noisy.pgm").string();
    const auto c = out("det_c"), d = out("det_d");
    REQUIRE(run("segment --model cv --image " + noisy + " --out-dir " + c.string()) == 0);
    REQUIRE(run("segment --model cv --image " + noisy + " --out-dir " + d.string()) == 0);
    CHECK(slurp(c / "energy.csv") == slurp(d / "energy.csv"));
    CHECK(slurp(c / "mask.png") == slurp(d / "mask.png"));
}

TEST_CASE("flower at tau 1e-4 stabilizes in fewer than 100 thresholding steps", "[cli-tau-1e-4]") {
    const auto dir = out("rec_tau_1e-4");
    REQUIRE(run("reconstruct --generator flower --grid 256 --tau 1e-4 --alpha-u inf --out-dir " + dir.string()) == 0);
    const auto manifest = ictm::io::read_manifest(dir / "manifest.json");
    CHECK(manifest["result"]["iterations"].get<int>() < 100);
}
