// Writes the synthetic inputs used by the examples and the CLI tests.
//
//   make_inputs OUT_DIR [SIZE]

#include <filesystem>
#include <iostream>
#include <string>

#include "ictm.hpp"
#include "ictm/io.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make_inputs OUT_DIR [SIZE]\n";
        return 2;
    }
    const std::filesystem::path out(argv[1]);
    const std::size_t size = argc > 2 ? std::stoul(argv[2]) : 128;
    try {
        std::filesystem::create_directories(out);
        const auto mask = ictm::synthetic::two_shape_mask(size, size);
        const auto clean = ictm::synthetic::two_tone(mask, size, size);
        ictm::io::write_pnm((out / "two_tone.pgm").string(), clean);
        ictm::io::write_pnm((out / "two_tone_noisy.pgm").string(), ictm::synthetic::add_gaussian_noise(clean, 0.1, 1));
        ictm::io::write_png((out / "two_tone_rgb.png").string(),
                            ictm::synthetic::two_tone(mask, size, size, 0.2, 0.8, 3));
        ictm::io::write_pnm((out / "inhomogeneous.pgm").string(), ictm::synthetic::inhomogeneous(mask, size, size));
        std::vector<double> truth(mask.begin(), mask.end());
        ictm::io::write_pnm((out / "truth.pgm").string(), ictm::Image(size, size, 1, truth));
        ictm::io::write_cloud((out / "flower.xyz").string(), ictm::generate_flower());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    std::cout << "wrote inputs to " << out.string() << '\n';
    return 0;
}
