#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "owleye/augmentor.hpp"
#include "owleye/checkpoint.hpp"
#include "owleye/dedup.hpp"
#include "owleye/gradcam.hpp"
#include "owleye/hierarchy.hpp"
#include "owleye/image_io.hpp"
#include "owleye/manifest.hpp"
#include "owleye/metrics.hpp"
#include "owleye/owlnet.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace owleye;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::Config: return kExitUsage;
        case ErrorKind::Numeric: return kExitNumeric;
        default: return kExitData;
    }
}

// Settings after defaults, then the config file, then explicit flags.
struct Settings {
    fs::path in;
    fs::path out;
    fs::path icons;
    fs::path manifest;
    fs::path train_manifest;
    fs::path val_manifest;
    fs::path model;
    CategoryMix mix = kDefaultMix;
    double threshold = 0.8;
    std::string similarity = "cosine";
    std::string preset = "desk";
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    TrainHyper hyper;
    double alpha = 0.5;
    int layer = 0;  // 0: last conv
    std::string target = "buggy";
    std::vector<long> counts;
};

template <typename T>
void take(const json& j, const char* key, T& dst) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) dst = it->get<T>();
}

void apply_config_file(const fs::path& path, Settings& s) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(e.byte, "config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
    try {
        std::string p;
        if (take(j, "input_dir", p), !p.empty()) s.in = std::exchange(p, "");
        if (take(j, "output_dir", p), !p.empty()) s.out = std::exchange(p, "");
        if (take(j, "icon_dir", p), !p.empty()) s.icons = std::exchange(p, "");
        if (j.contains("mix")) {
            const auto m = j["mix"].get<std::vector<double>>();
            if (m.size() != 4) fail(ErrorKind::Config, "mix needs 4 fractions");
            std::copy(m.begin(), m.end(), s.mix.begin());
        }
        take(j, "threshold", s.threshold);
        take(j, "similarity", s.similarity);
        take(j, "preset", s.preset);
        take(j, "seed", s.seed);
        take(j, "jobs", s.jobs);
        if (j.contains("train")) {
            const json& t = j["train"];
            take(t, "epochs", s.hyper.epochs);
            take(t, "batch_size", s.hyper.batch_size);
            take(t, "lr", s.hyper.lr);
            take(t, "momentum", s.hyper.momentum);
            take(t, "lr_milestones", s.hyper.lr_milestones);
            take(t, "lr_decay", s.hyper.lr_decay);
            take(t, "weight_decay", s.hyper.weight_decay);
            take(t, "jitter_px", s.hyper.jitter_px);
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, "config " + path.string() + ": " + e.what());
    }
}

void validate_settings(const Settings& s) {
    double total = 0;
    for (double f : s.mix) {
        if (!(f >= 0.0)) fail(ErrorKind::Config, "mix fractions must be >= 0");
        total += f;
    }
    if (total > 1.0 + 1e-12) fail(ErrorKind::Config, "mix fractions sum to more than 1");
    if (!(s.threshold > 0.0 && s.threshold <= 1.0)) fail(ErrorKind::Config, "threshold must be in (0,1]");
    if (s.similarity != "cosine" && s.similarity != "centered") fail(ErrorKind::Config, "similarity must be cosine or centered");
    if (s.jobs < 1) fail(ErrorKind::Config, "jobs must be >= 1");
    std::set<fs::path> seen;
    for (const fs::path& p : {s.in, s.out, s.icons}) {
        if (p.empty()) continue;
        if (!seen.insert(fs::weakly_canonical(p)).second) fail(ErrorKind::Config, "input, output and icon paths must differ");
    }
}

void emit(const json& j) {
    std::cout << j.dump() << '\n';
}

// Runs fn(i) for i in [0, n) on `jobs` threads. The first exception is
// rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i, 0u);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    fn(i, w);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (fs::is_regular_file(dir)) return {dir};
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, "not a file or directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// augment

struct SourcePair {
    std::string id;
    fs::path image;
    fs::path hierarchy;
};

std::vector<SourcePair> find_pairs(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, "input directory not found: " + dir.string());
    std::map<std::string, SourcePair> by_stem;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string stem = e.path().stem().string();
        if (is_image_file(e.path())) {
            by_stem[stem].image = e.path();
        } else if (e.path().extension() == ".json") {
            by_stem[stem].hierarchy = e.path();
        }
    }
    std::vector<SourcePair> out;
    for (auto& [stem, p] : by_stem) {
        if (p.image.empty() || p.hierarchy.empty()) {
            spdlog::warn("skipping unmatched source '{}' (missing {})", stem, p.image.empty() ? "image" : "hierarchy");
            continue;
        }
        p.id = stem;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<RasterImage> load_icons(const fs::path& dir) {
    std::vector<RasterImage> icons;
    if (dir.empty()) return icons;
    for (const auto& p : list_images(dir)) icons.push_back(read_image(p));
    if (icons.empty()) spdlog::warn("icon directory {} has no images; using the built-in icon", dir.string());
    return icons;
}

int cmd_augment(const Settings& s) {
    if (s.in.empty() || s.out.empty()) fail(ErrorKind::Config, "augment needs --in and --out");
    const auto sources = find_pairs(s.in);
    if (sources.empty()) spdlog::warn("no (image, hierarchy) pairs in {}", s.in.string());
    const auto icons = load_icons(s.icons);
    const auto cats = assign_categories(sources.size(), s.mix, derive_seed(s.seed, "categories"));

    struct Outcome {
        std::vector<ManifestRow> rows;
        std::string skipped;
    };
    std::vector<Outcome> outcomes(sources.size());
    parallel_for(sources.size(), s.jobs, [&](std::size_t i, unsigned) {
        if (!cats[i]) return;
        const SourcePair& src = sources[i];
        const RasterImage img = read_image(src.image);
        const ViewTree tree = parse_hierarchy(read_text_file(src.hierarchy));
        const std::uint64_t seed = derive_seed(s.seed, "augment/" + src.id);
        std::optional<RasterImage> icon;
        if (!icons.empty()) icon = icons[Rng(derive_seed(seed, "icon")).below(icons.size())];
        const auto first = static_cast<std::size_t>(*cats[i]);
        for (std::size_t k = 0; k < kSynthesizedCategories.size(); ++k) {
            const BugCategory cat = kSynthesizedCategories[(first + k) % kSynthesizedCategories.size()];
            try {
                const AugmentResult r = augment(img, tree, cat, icon, seed, {}, src.id);
                const std::string clean_rel = "clean/" + src.id + ".png";
                const std::string buggy_rel = "buggy/" + src.id + "_" + std::string(to_string(cat)) + ".png";
                write_png(s.out / clean_rel, img);
                write_png(s.out / buggy_rel, r.image);
                outcomes[i].rows.push_back({buggy_rel, src.id, true, cat, r.record.bug_region, seed});
                outcomes[i].rows.push_back({clean_rel, src.id, false, cat, std::nullopt, std::nullopt});
                if (k > 0) spdlog::info("{}: no candidate for {}, used {}", src.id, to_string(kSynthesizedCategories[first]), to_string(cat));
                return;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NoCandidate) throw;
            }
        }
        outcomes[i].skipped = "no eligible view for any category";
    });

    std::vector<ManifestRow> rows;
    std::map<std::string, int> per_cat;
    int skipped = 0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (!outcomes[i].skipped.empty()) {
            ++skipped;
            spdlog::warn("skipping {}: {}", sources[i].id, outcomes[i].skipped);
            emit({{"skipped", sources[i].id}, {"reason", outcomes[i].skipped}});
        }
        for (auto& r : outcomes[i].rows) {
            if (r.buggy) ++per_cat[std::string(to_string(*r.category))];
            rows.push_back(std::move(r));
        }
    }
    fs::create_directories(s.out);
    const fs::path manifest = s.out / "manifest.jsonl";
    write_text_file(manifest, format_manifest(rows));
    spdlog::info("augmented {} of {} sources into {}", rows.size() / 2, sources.size(), manifest.string());
    emit({{"manifest", manifest.string()}, {"rows", rows.size()}, {"sources", sources.size()}, {"skipped", skipped},
          {"categories", per_cat}});
    return kExitOk;
}

// ---------------------------------------------------------------------------
// dedup

int cmd_dedup(const Settings& s) {
    if (s.manifest.empty() || s.out.empty()) fail(ErrorKind::Config, "dedup needs --manifest and --out");
    const auto rows = read_manifest(s.manifest);
    const SimilarityMode mode = s.similarity == "centered" ? SimilarityMode::CenteredCosine : SimilarityMode::Cosine;

    std::vector<fs::path> resolved(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) resolved[i] = fs::weakly_canonical(resolve_row_path(s.manifest, rows[i].path));
    std::vector<ImageSignature> sigs(rows.size());
    parallel_for(rows.size(), s.jobs, [&](std::size_t i, unsigned) { sigs[i] = image_signature(orb_features(read_image(resolved[i]))); });

    struct Verdict {
        bool kept = true;
        double max_sim = 0.0;
        std::optional<std::size_t> nearest;
    };
    std::vector<Verdict> verdict(rows.size());
    auto drop = [&](std::size_t i, std::size_t j) { verdict[i] = {false, 1.0, j}; };
    // Exact duplicates (same file, or identical non-empty signature) go first,
    // whatever the threshold.
    std::map<std::string, std::size_t> first_path;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto [it, fresh] = first_path.emplace(resolved[i].string(), i);
        if (!fresh) drop(i, it->second);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!verdict[i].kept || sigs[i].keypoint_count == 0) continue;
        for (std::size_t j = 0; j < i; ++j) {
            if (verdict[j].kept && rows[j].buggy == rows[i].buggy && sigs[j].keypoint_count > 0 && sigs[j].vector == sigs[i].vector) {
                drop(i, j);
                break;
            }
        }
    }
    // Greedy near-duplicate removal within each label group.
    for (bool label : {false, true}) {
        std::vector<std::size_t> idx;
        std::vector<ImageSignature> group;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (verdict[i].kept && rows[i].buggy == label) {
                idx.push_back(i);
                group.push_back(sigs[i]);
            }
        }
        const auto r = dedup_stream(std::span<const ImageSignature>(group), s.threshold,
                                    derive_seed(s.seed, label ? "dedup/buggy" : "dedup/clean"), mode);
        for (std::size_t g = 0; g < group.size(); ++g) {
            const auto& d = r.decisions[g];
            verdict[idx[g]] = {d.kept, d.max_sim, d.nearest ? std::optional<std::size_t>(idx[*d.nearest]) : std::nullopt};
        }
    }

    std::vector<ManifestRow> kept;
    int kept_buggy = 0;
    const fs::path out_dir = fs::weakly_canonical(s.out);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Verdict& v = verdict[i];
        emit({{"path", rows[i].path}, {"kept", v.kept}, {"max_sim", v.max_sim},
              {"nearest", v.nearest ? json(rows[*v.nearest].path) : json(nullptr)}});
        if (!v.kept) continue;
        ManifestRow r = rows[i];
        r.path = fs::proximate(resolved[i], out_dir).generic_string();
        kept_buggy += r.buggy;
        kept.push_back(std::move(r));
    }
    fs::create_directories(s.out);
    write_text_file(s.out / "manifest.jsonl", format_manifest(kept));
    const int kept_clean = static_cast<int>(kept.size()) - kept_buggy;
    spdlog::info("kept {} of {} rows ({} buggy, {} clean) at threshold {}", kept.size(), rows.size(), kept_buggy, kept_clean,
                 s.threshold);
    if (kept_buggy != kept_clean) spdlog::warn("label balance after dedup: {} buggy vs {} clean", kept_buggy, kept_clean);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train / eval

Dataset load_dataset(const fs::path& manifest, const NetworkConfig& cfg, unsigned jobs) {
    const auto rows = read_manifest(manifest);
    std::vector<std::optional<Example>> loaded(rows.size());
    parallel_for(rows.size(), jobs, [&](std::size_t i, unsigned) {
        const auto& r = rows[i];
        const fs::path p = resolve_row_path(manifest, r.path);
        const RasterImage img = read_image(p);
        std::optional<BBox> region;
        if (r.bug_region && img.width() <= img.height()) {
            // Map the region into network input coordinates.
            const double sx = static_cast<double>(cfg.input_w) / img.width();
            const double sy = static_cast<double>(cfg.input_h) / img.height();
            region = BBox{static_cast<int>(std::floor(r.bug_region->x1 * sx)), static_cast<int>(std::floor(r.bug_region->y1 * sy)),
                          static_cast<int>(std::ceil(r.bug_region->x2 * sx)), static_cast<int>(std::ceil(r.bug_region->y2 * sy))};
        }
        loaded[i] = Example{fit_to_input(img, cfg), r.buggy ? kBuggy : kClean, r.category,
                            r.source_id.empty() ? p.stem().string() : r.source_id, region};
    });
    Dataset data;
    data.reserve(rows.size());
    for (auto& e : loaded) data.push_back(std::move(*e));
    return data;
}

json confusion_json(const Confusion& c) {
    auto opt = [](std::optional<double> v) { return v ? json(*v) : json(nullptr); };
    return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}, {"precision", opt(c.precision())},
            {"recall", opt(c.recall())}, {"f1", opt(c.f1())}};
}

json report_json(const MetricsReport& r) {
    json per = json::object();
    for (const auto& [cat, c] : r.per_category) per[std::string(to_string(cat))] = confusion_json(c);
    return {{"overall", confusion_json(r.overall)}, {"per_category", per}};
}

int cmd_train(const Settings& s) {
    if (s.train_manifest.empty() || s.out.empty()) fail(ErrorKind::Config, "train needs --train and --out");
    const NetworkConfig cfg = preset_config(s.preset);
    const Dataset train_set = load_dataset(s.train_manifest, cfg, s.jobs);
    const Dataset val_set = s.val_manifest.empty() ? Dataset{} : load_dataset(s.val_manifest, cfg, s.jobs);
    if (val_set.empty()) spdlog::warn("no validation data; keeping the final epoch");
    TrainHyper h = s.hyper;
    h.seed = s.seed;
    Network<float> net(cfg, derive_seed(s.seed, "init"));
    spdlog::info("training {} preset ({} parameters) on {} examples, validating on {}", s.preset, net.parameter_count(),
                 train_set.size(), val_set.size());
    const auto res = train(net, train_set, val_set, h, [](const EpochStats& st) {
        json j = {{"epoch", st.epoch}, {"lr", st.lr}, {"train_loss", st.train_loss}, {"train_accuracy", st.train_accuracy}};
        j["val_f1"] = st.val_f1 ? json(*st.val_f1) : json(nullptr);
        emit(j);
        spdlog::debug("epoch {} loss {:.4f} acc {:.3f}", st.epoch, st.train_loss, st.train_accuracy);
    });
    json metrics = {{"best_val_f1", res.best_val_f1 ? json(*res.best_val_f1) : json(nullptr)}};
    fs::create_directories(s.out);
    const fs::path ck = s.out / "model.owlnet";
    save_checkpoint(ck, net, {res.best_epoch, metrics});
    spdlog::info("saved epoch {} to {}", res.best_epoch, ck.string());
    emit({{"checkpoint", ck.string()}, {"best_epoch", res.best_epoch}, {"best_val_f1", metrics["best_val_f1"]}});
    return kExitOk;
}

int cmd_eval(const Settings& s) {
    MetricsReport report;
    if (!s.counts.empty()) {
        if (s.counts.size() != 4) fail(ErrorKind::Config, "--counts takes tp,fp,fn,tn");
        report.overall = {s.counts[0], s.counts[1], s.counts[2], s.counts[3]};
    } else {
        if (s.model.empty() || s.manifest.empty()) fail(ErrorKind::Config, "eval needs --model and --manifest (or --counts)");
        auto ck = load_checkpoint(s.model);
        const Dataset data = load_dataset(s.manifest, ck.net.config(), s.jobs);
        report = evaluate(ck.net, data);
    }
    std::cerr << format_metrics_table(report);
    emit(report_json(report));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// detect / localize

int cmd_detect(const Settings& s) {
    if (s.model.empty() || s.in.empty()) fail(ErrorKind::Config, "detect needs --model and --in");
    auto ck = load_checkpoint(s.model);
    const auto files = list_images(s.in);
    std::vector<Network<float>> nets(std::max(1u, std::min<unsigned>(s.jobs, static_cast<unsigned>(std::max<std::size_t>(files.size(), 1)))), ck.net);
    std::vector<Detection> dets(files.size());
    parallel_for(files.size(), static_cast<unsigned>(nets.size()), [&](std::size_t i, unsigned w) { dets[i] = classify(nets[w], read_image(files[i])); });
    for (std::size_t i = 0; i < files.size(); ++i) {
        emit({{"path", files[i].string()}, {"p_buggy", dets[i].p_buggy}, {"label", dets[i].buggy ? "buggy" : "clean"}});
    }
    spdlog::info("{} of {} images flagged", std::count_if(dets.begin(), dets.end(), [](const Detection& d) { return d.buggy; }),
                 files.size());
    return kExitOk;
}

int cmd_localize(const Settings& s) {
    if (s.model.empty() || s.in.empty() || s.out.empty()) fail(ErrorKind::Config, "localize needs --model, --in and --out");
    if (!(s.alpha >= 0.0 && s.alpha <= 1.0)) fail(ErrorKind::Config, "alpha must be in [0,1]");
    const int target = s.target == "buggy" ? kBuggy : s.target == "clean" ? kClean : -1;
    if (target < 0) fail(ErrorKind::Config, "target must be buggy or clean");
    auto ck = load_checkpoint(s.model);
    std::optional<std::size_t> layer;
    if (s.layer > 0) layer = static_cast<std::size_t>(s.layer);
    for (const auto& file : list_images(s.in)) {
        const RasterImage portrait = rotate_to_portrait(read_image(file));
        const Detection d = classify(ck.net, portrait);
        LocalizationMap m = grad_cam(ck.net, portrait, target, layer);
        // Back to the screenshot's own (portrait) resolution.
        m.values = resize_grid(m.values, portrait.width(), portrait.height());
        const fs::path heat = s.out / (file.stem().string() + "_heatmap.png");
        write_png(heat, overlay_heatmap(portrait, m, s.alpha));
        json j = {{"path", file.string()}, {"p_buggy", d.p_buggy}, {"heatmap", heat.string()}, {"layer", m.layer_index}};
        try {
            const BBox r = map_to_region(m);
            const Point p = map_argmax(m.values);
            j["region"] = {r.x1, r.y1, r.x2, r.y2};
            j["argmax"] = {p.x, p.y};
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateRegion) throw;
            j["region"] = nullptr;
            j["argmax"] = nullptr;
            spdlog::warn("{}: all-zero localization map", file.string());
        }
        emit(j);
    }
    return kExitOk;
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("owleye");
    logger->set_pattern("%^[%l]%$ %v");
    spdlog::set_default_logger(logger);
    const char* env = std::getenv("OWLEYE_LOG");
    const std::string level = env ? env : "info";
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        spdlog::set_level(spdlog::level::info);
        if (level != "info") spdlog::warn("unknown OWLEYE_LOG value '{}', using info", level);
    }
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"UI display issue detection: augment, dedup, train, eval, detect, localize"};
    app.require_subcommand(1);
    app.fallthrough();

    Settings flags;
    std::string config_path;
    std::string mix_text;
    std::vector<CLI::Option*> explicit_opts;

    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", flags.seed, "global seed");
    auto* out_opt = app.add_option("--out", flags.out, "output directory");
    auto* preset_opt = app.add_option("--preset", flags.preset, "network preset")->check(CLI::IsMember({"paper", "desk"}));
    auto* jobs_opt = app.add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* aug = app.add_subcommand("augment", "synthesize buggy screenshots from (image, hierarchy) pairs");
    auto* in_opt = aug->add_option("--in", flags.in, "directory of <name>.png + <name>.json pairs");
    auto* icons_opt = aug->add_option("--icons", flags.icons, "directory of missing-image icons");
    auto* mix_opt = aug->add_option("--mix", mix_text, "category fractions occlusion,overlap,missing,null");

    auto* dd = app.add_subcommand("dedup", "drop near-duplicate screenshots from a manifest");
    auto* dd_manifest = dd->add_option("--manifest", flags.manifest, "input manifest")->required();
    auto* thr_opt = dd->add_option("--threshold", flags.threshold, "drop when similarity is above this");
    auto* sim_opt = dd->add_option("--similarity", flags.similarity, "cosine or centered")->check(CLI::IsMember({"cosine", "centered"}));

    auto* tr = app.add_subcommand("train", "train a detector");
    tr->add_option("--train", flags.train_manifest, "training manifest")->required();
    tr->add_option("--val", flags.val_manifest, "validation manifest (apps disjoint from training)");
    auto* ep_opt = tr->add_option("--epochs", flags.hyper.epochs, "epochs");
    auto* bs_opt = tr->add_option("--batch-size", flags.hyper.batch_size, "batch size");
    auto* lr_opt = tr->add_option("--lr", flags.hyper.lr, "learning rate");
    auto* mom_opt = tr->add_option("--momentum", flags.hyper.momentum, "SGD momentum");
    auto* ms_opt = tr->add_option("--milestones", flags.hyper.lr_milestones, "epochs where the learning rate decays")->delimiter(',');
    auto* wd_opt = tr->add_option("--weight-decay", flags.hyper.weight_decay, "L2 penalty on weights");
    auto* jit_opt = tr->add_option("--jitter", flags.hyper.jitter_px, "random shift in pixels");

    auto* ev = app.add_subcommand("eval", "precision / recall / F1 of a checkpoint on a manifest");
    auto* ev_model = ev->add_option("--model", flags.model, "checkpoint");
    auto* ev_manifest = ev->add_option("--manifest", flags.manifest, "test manifest");
    ev->add_option("--counts", flags.counts, "report fixed counts tp,fp,fn,tn instead")->delimiter(',');

    auto* det = app.add_subcommand("detect", "classify screenshots");
    det->add_option("--model", flags.model, "checkpoint")->required();
    auto* det_in = det->add_option("--in", flags.in, "image file or directory")->required();

    auto* loc = app.add_subcommand("localize", "Grad-CAM heatmaps for screenshots");
    loc->add_option("--model", flags.model, "checkpoint")->required();
    auto* loc_in = loc->add_option("--in", flags.in, "image file or directory")->required();
    loc->add_option("--alpha", flags.alpha, "heatmap opacity");
    loc->add_option("--layer", flags.layer, "conv layer (1-based, default last)");
    loc->add_option("--target", flags.target, "buggy or clean")->check(CLI::IsMember({"buggy", "clean"}));
    (void)ev_model;
    (void)ev_manifest;
    (void)dd_manifest;
    (void)det_in;
    (void)loc_in;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        // Defaults, then config file, then flags given on the command line.
        Settings s;
        if (!config_path.empty()) apply_config_file(config_path, s);
        auto given = [](const CLI::Option* o) { return o && o->count() > 0; };
        if (given(seed_opt)) s.seed = flags.seed;
        if (given(out_opt)) s.out = flags.out;
        if (given(preset_opt)) s.preset = flags.preset;
        if (given(jobs_opt)) s.jobs = flags.jobs;
        if (given(in_opt) || given(det_in) || given(loc_in)) s.in = flags.in;
        if (given(icons_opt)) s.icons = flags.icons;
        if (given(thr_opt)) s.threshold = flags.threshold;
        if (given(sim_opt)) s.similarity = flags.similarity;
        if (given(ep_opt)) s.hyper.epochs = flags.hyper.epochs;
        if (given(bs_opt)) s.hyper.batch_size = flags.hyper.batch_size;
        if (given(lr_opt)) s.hyper.lr = flags.hyper.lr;
        if (given(mom_opt)) s.hyper.momentum = flags.hyper.momentum;
        if (given(ms_opt)) s.hyper.lr_milestones = flags.hyper.lr_milestones;
        if (given(wd_opt)) s.hyper.weight_decay = flags.hyper.weight_decay;
        if (given(jit_opt)) s.hyper.jitter_px = flags.hyper.jitter_px;
        if (given(mix_opt)) {
            std::vector<double> m;
            std::stringstream ss(mix_text);
            for (std::string part; std::getline(ss, part, ',');) m.push_back(std::stod(part));
            if (m.size() != 4) fail(ErrorKind::Config, "--mix needs 4 comma-separated fractions");
            std::copy(m.begin(), m.end(), s.mix.begin());
        }
        s.manifest = flags.manifest;
        s.train_manifest = flags.train_manifest;
        s.val_manifest = flags.val_manifest;
        s.model = flags.model;
        s.alpha = flags.alpha;
        s.layer = flags.layer;
        s.target = flags.target;
        s.counts = flags.counts;
        validate_settings(s);

        if (aug->parsed()) return cmd_augment(s);
        if (dd->parsed()) return cmd_dedup(s);
        if (tr->parsed()) return cmd_train(s);
        if (ev->parsed()) return cmd_eval(s);
        if (det->parsed()) return cmd_detect(s);
        if (loc->parsed()) return cmd_localize(s);
        return kExitUsage;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e.kind());
    } catch (const std::invalid_argument& e) {
        spdlog::error("bad number: {}", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitData;
    }
}
