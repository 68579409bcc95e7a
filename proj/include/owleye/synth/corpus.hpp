#ifndef OWLEYE_SYNTH_CORPUS_HPP
#define OWLEYE_SYNTH_CORPUS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "owleye/augmentor.hpp"
#include "owleye/owlnet.hpp"
#include "owleye/rng.hpp"
#include "owleye/synth/synthetic_ui.hpp"

namespace owleye::synth {

struct CorpusSpec {
    int first_app = 0;
    int apps = 10;
    int screens_per_app = 4;
    std::uint64_t seed = 0;
    int width = 128;
    int height = 192;
    CategoryMix mix = kDefaultMix;
};

/// One clean and one buggy example per source screen, categories assigned
/// by assign_categories. A screen with no eligible view for its category
/// falls through to the next kind.
inline Dataset make_paired_corpus(const CorpusSpec& spec, const NetworkConfig& cfg) {
    std::vector<SyntheticScreen> screens;
    for (int a = spec.first_app; a < spec.first_app + spec.apps; ++a) {
        for (int s = 0; s < spec.screens_per_app; ++s) screens.push_back(make_screen(a, s, spec.width, spec.height, spec.seed));
    }
    const auto cats = assign_categories(screens.size(), spec.mix, derive_seed(spec.seed, "categories"));
    Dataset out;
    for (std::size_t i = 0; i < screens.size(); ++i) {
        if (!cats[i]) continue;
        const SyntheticScreen& scr = screens[i];
        const std::uint64_t seed = derive_seed(spec.seed, "augment/" + scr.source_id);
        const auto first = static_cast<std::size_t>(*cats[i]);
        for (std::size_t k = 0; k < 4; ++k) {
            const BugCategory cat = kSynthesizedCategories[(first + k) % 4];
            try {
                AugmentResult r = augment(scr.image, scr.tree, cat, std::nullopt, seed, {}, scr.source_id);
                out.push_back({fit_to_input(scr.image, cfg), kClean, cat, scr.source_id, std::nullopt});
                out.push_back({fit_to_input(r.image, cfg), kBuggy, cat, scr.source_id, r.record.bug_region});
                break;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NoCandidate) throw;
            }
        }
    }
    return out;
}

}  // namespace owleye::synth

#endif
