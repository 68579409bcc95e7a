// Writes synthetic screenshots with their view hierarchies:
//   <out>/<app>_<screen>.png and <out>/<app>_<screen>.json
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "owleye/hierarchy.hpp"
#include "owleye/image_io.hpp"
#include "owleye/manifest.hpp"
#include "owleye/synth/synthetic_ui.hpp"

namespace fs = std::filesystem;
using namespace owleye;

int main(int argc, char** argv) {
    CLI::App app{"generate a synthetic screenshot corpus"};
    fs::path out;
    int first_app = 0, apps = 10, screens = 4, width = 128, height = 192;
    std::uint64_t seed = 0;
    app.add_option("--out", out, "output directory")->required();
    app.add_option("--first-app", first_app, "first app index");
    app.add_option("--apps", apps, "number of apps")->check(CLI::PositiveNumber);
    app.add_option("--screens", screens, "screens per app")->check(CLI::PositiveNumber);
    app.add_option("--width", width, "screen width")->check(CLI::Range(32, 4096));
    app.add_option("--height", height, "screen height")->check(CLI::Range(32, 4096));
    app.add_option("--seed", seed, "seed");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    try {
        fs::create_directories(out);
        int n = 0;
        for (int a = first_app; a < first_app + apps; ++a) {
            for (int s = 0; s < screens; ++s) {
                const auto scr = synth::make_screen(a, s, width, height, seed);
                write_png(out / (scr.source_id + ".png"), scr.image);
                write_text_file(out / (scr.source_id + ".json"), serialize_hierarchy(scr.tree));
                ++n;
            }
        }
        std::cout << n << " screens written to " << out.string() << '\n';
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
    return 0;
}
