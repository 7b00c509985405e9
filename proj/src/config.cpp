#include "cxr/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "cxr/digest.hpp"
#include "cxr/errors.hpp"
#include "cxr/resampling.hpp"
#include "cxr/rng.hpp"

namespace fs = std::filesystem;

namespace cxr {

std::string_view model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Svm: return "svm";
        case ModelKind::Forest: return "forest";
        case ModelKind::Cnn: return "cnn";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view text) {
    for (ModelKind k : {ModelKind::Svm, ModelKind::Forest, ModelKind::Cnn})
        if (model_kind_name(k) == text) return k;
    throw UsageError("unsupported model '" + std::string(text) + "' (supported: svm, forest, cnn)");
}

StageSeeds StageSeeds::derive(std::uint64_t seed) {
    return {derive_seed(seed, "split"), derive_seed(seed, "resample"), derive_seed(seed, "model"),
            derive_seed(seed, "explain")};
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <class T>
std::string fmt_uint(T v) {
    return std::to_string(v);
}

struct Entry {
    std::string section;
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] void bad_value(const std::string& where, const std::string& value, const std::string& expected) {
    throw ConfigError(where + ": expected " + expected + ", got '" + value + "'");
}

// `where` is prefixed by the caller when an exception propagates; these
// helpers only describe the value.
std::uint64_t to_u64(const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) bad_value("value", v, "an unsigned integer");
    return out;
}

std::size_t to_size(const std::string& v, std::size_t min_value = 0) {
    const auto n = to_u64(v);
    if (n < min_value) bad_value("value", v, "an integer >= " + std::to_string(min_value));
    return static_cast<std::size_t>(n);
}

double to_double(const std::string& v) {
    double out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
        bad_value("value", v, "a finite number");
    return out;
}

double to_positive(const std::string& v) {
    const double d = to_double(v);
    if (!(d > 0.0)) bad_value("value", v, "a positive number");
    return d;
}

bool to_bool(const std::string& v) {
    std::string s = v;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    bad_value("value", v, "a boolean (true/false)");
}

std::vector<std::string> split_commas(const std::string& v) {
    std::vector<std::string> parts;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
        parts.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    }
    return parts;
}

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = [] {
        std::vector<Entry> t;
        auto add = [&](std::string s, std::string k, auto set, auto get) {
            t.push_back({std::move(s), std::move(k), set, get});
        };
        add("run", "seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); },
            [](const RunConfig& c) { return fmt_uint(c.seed); });
        add("run", "output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
            [](const RunConfig& c) { return c.output_dir.string(); });

        add("dataset", "root", [](RunConfig& c, const std::string& v) { c.dataset_root = v; },
            [](const RunConfig& c) { return c.dataset_root.string(); });
        add("dataset", "ratios",
            [](RunConfig& c, const std::string& v) {
                const auto p = split_commas(v);
                if (p.size() != 3) bad_value("value", v, "three comma-separated ratios train,val,test");
                c.ratios = {to_double(p[0]), to_double(p[1]), to_double(p[2])};
            },
            [](const RunConfig& c) {
                return fmt_double(c.ratios.train) + "," + fmt_double(c.ratios.val) + "," + fmt_double(c.ratios.test);
            });

        add("preprocess", "image_side", [](RunConfig& c, const std::string& v) { c.image_side = to_size(v, 8); },
            [](const RunConfig& c) { return fmt_uint(c.image_side); });
        add("preprocess", "gamma", [](RunConfig& c, const std::string& v) { c.gamma = to_positive(v); },
            [](const RunConfig& c) { return fmt_double(c.gamma); });
        add("preprocess", "debug_trace", [](RunConfig& c, const std::string& v) { c.debug_trace = to_bool(v); },
            [](const RunConfig& c) { return fmt_bool(c.debug_trace); });

        add("features", "hog_side", [](RunConfig& c, const std::string& v) { c.hog_side = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.hog_side); });
        add("features", "cell_size", [](RunConfig& c, const std::string& v) { c.hog.cell_size = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.hog.cell_size); });
        add("features", "block_size", [](RunConfig& c, const std::string& v) { c.hog.block_size = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.hog.block_size); });
        add("features", "block_stride", [](RunConfig& c, const std::string& v) { c.hog.block_stride = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.hog.block_stride); });
        add("features", "orientations", [](RunConfig& c, const std::string& v) { c.hog.orientations = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.hog.orientations); });
        add("features", "signed_gradients",
            [](RunConfig& c, const std::string& v) { c.hog.signed_gradients = to_bool(v); },
            [](const RunConfig& c) { return fmt_bool(c.hog.signed_gradients); });
        add("features", "clip", [](RunConfig& c, const std::string& v) { c.hog.clip = to_positive(v); },
            [](const RunConfig& c) { return fmt_double(c.hog.clip); });
        add("features", "cnn_side", [](RunConfig& c, const std::string& v) { c.cnn_side = to_size(v, 8); },
            [](const RunConfig& c) { return fmt_uint(c.cnn_side); });

        add("resample", "strategy", [](RunConfig& c, const std::string& v) { c.resample_strategy = v; },
            [](const RunConfig& c) { return c.resample_strategy; });
        add("resample", "absolute", [](RunConfig& c, const std::string& v) { c.resample_absolute = to_bool(v); },
            [](const RunConfig& c) { return fmt_bool(c.resample_absolute); });
        add("resample", "k_neighbors", [](RunConfig& c, const std::string& v) { c.k_neighbors = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.k_neighbors); });

        add("model", "type", [](RunConfig& c, const std::string& v) { c.model = parse_model_kind(v); },
            [](const RunConfig& c) { return std::string(model_kind_name(c.model)); });

        add("svm", "c", [](RunConfig& c, const std::string& v) { c.svm.C = to_positive(v); },
            [](const RunConfig& c) { return fmt_double(c.svm.C); });
        add("svm", "kernel",
            [](RunConfig& c, const std::string& v) {
                if (v == "linear") c.svm.kernel.type = svm::KernelSpec::Type::Linear;
                else if (v == "rbf") c.svm.kernel.type = svm::KernelSpec::Type::Rbf;
                else bad_value("value", v, "linear or rbf");
            },
            [](const RunConfig& c) {
                return std::string(c.svm.kernel.type == svm::KernelSpec::Type::Linear ? "linear" : "rbf");
            });
        add("svm", "gamma",
            [](RunConfig& c, const std::string& v) {
                c.svm.kernel.gamma = to_double(v);
                if (c.svm.kernel.gamma < 0) bad_value("value", v, "gamma >= 0 (0 means 1/dimension)");
            },
            [](const RunConfig& c) { return fmt_double(c.svm.kernel.gamma); });
        add("svm", "tol", [](RunConfig& c, const std::string& v) { c.svm.tol = to_positive(v); },
            [](const RunConfig& c) { return fmt_double(c.svm.tol); });
        add("svm", "max_passes", [](RunConfig& c, const std::string& v) { c.svm.max_passes = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.svm.max_passes); });

        add("forest", "trees", [](RunConfig& c, const std::string& v) { c.forest.n_trees = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.forest.n_trees); });
        add("forest", "max_depth", [](RunConfig& c, const std::string& v) { c.forest.max_depth = to_size(v); },
            [](const RunConfig& c) { return fmt_uint(c.forest.max_depth); });
        add("forest", "min_leaf", [](RunConfig& c, const std::string& v) { c.forest.min_leaf = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.forest.min_leaf); });
        add("forest", "features_per_split",
            [](RunConfig& c, const std::string& v) { c.forest.features_per_split = to_size(v); },
            [](const RunConfig& c) { return fmt_uint(c.forest.features_per_split); });
        add("forest", "bootstrap", [](RunConfig& c, const std::string& v) { c.forest.bootstrap = to_bool(v); },
            [](const RunConfig& c) { return fmt_bool(c.forest.bootstrap); });
        add("forest", "threads", [](RunConfig& c, const std::string& v) { c.forest.threads = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.forest.threads); });

        add("cnn", "learning_rate", [](RunConfig& c, const std::string& v) { c.cnn.learning_rate = to_positive(v); },
            [](const RunConfig& c) { return fmt_double(c.cnn.learning_rate); });
        add("cnn", "epochs", [](RunConfig& c, const std::string& v) { c.cnn.epochs = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.cnn.epochs); });
        add("cnn", "batch_size", [](RunConfig& c, const std::string& v) { c.cnn.batch_size = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.cnn.batch_size); });
        add("cnn", "hidden", [](RunConfig& c, const std::string& v) { c.cnn.hidden = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.cnn.hidden); });
        add("cnn", "channels",
            [](RunConfig& c, const std::string& v) {
                const auto p = split_commas(v);
                if (p.size() != 3) bad_value("value", v, "three comma-separated channel counts");
                for (std::size_t i = 0; i < 3; ++i) c.cnn.channels[i] = to_size(p[i], 1);
            },
            [](const RunConfig& c) {
                return fmt_uint(c.cnn.channels[0]) + "," + fmt_uint(c.cnn.channels[1]) + "," +
                       fmt_uint(c.cnn.channels[2]);
            });
        add("cnn", "padding",
            [](RunConfig& c, const std::string& v) {
                if (v == "valid") c.cnn.padding = cnn::Padding::Valid;
                else if (v == "same") c.cnn.padding = cnn::Padding::Same;
                else bad_value("value", v, "valid or same");
            },
            [](const RunConfig& c) { return std::string(c.cnn.padding == cnn::Padding::Valid ? "valid" : "same"); });

        add("explain", "enabled", [](RunConfig& c, const std::string& v) { c.explain_enabled = to_bool(v); },
            [](const RunConfig& c) { return fmt_bool(c.explain_enabled); });
        add("explain", "count", [](RunConfig& c, const std::string& v) { c.explain_count = to_size(v); },
            [](const RunConfig& c) { return fmt_uint(c.explain_count); });
        add("explain", "grid", [](RunConfig& c, const std::string& v) { c.lime.grid = to_size(v, 2); },
            [](const RunConfig& c) { return fmt_uint(c.lime.grid); });
        add("explain", "samples", [](RunConfig& c, const std::string& v) { c.lime.num_samples = to_size(v, 2); },
            [](const RunConfig& c) { return fmt_uint(c.lime.num_samples); });
        add("explain", "kernel_width", [](RunConfig& c, const std::string& v) { c.lime.kernel_width = to_positive(v); },
            [](const RunConfig& c) { return fmt_double(c.lime.kernel_width); });
        add("explain", "ridge",
            [](RunConfig& c, const std::string& v) {
                c.lime.ridge = to_double(v);
                if (c.lime.ridge < 0) bad_value("value", v, "ridge >= 0");
            },
            [](const RunConfig& c) { return fmt_double(c.lime.ridge); });
        add("explain", "top_k", [](RunConfig& c, const std::string& v) { c.top_k = to_size(v, 1); },
            [](const RunConfig& c) { return fmt_uint(c.top_k); });
        add("explain", "fill",
            [](RunConfig& c, const std::string& v) {
                if (v == "mean") {
                    c.lime.fill = {};
                } else {
                    c.lime.fill = {explain::FillRule::Kind::Constant, to_double(v)};
                }
            },
            [](const RunConfig& c) {
                return c.lime.fill.kind == explain::FillRule::Kind::Mean ? std::string("mean")
                                                                         : fmt_double(c.lime.fill.value);
            });

        add("seeds", "split", [](RunConfig& c, const std::string& v) { c.seeds.split = to_u64(v); },
            [](const RunConfig& c) { return fmt_uint(c.seeds.split); });
        add("seeds", "resample", [](RunConfig& c, const std::string& v) { c.seeds.resample = to_u64(v); },
            [](const RunConfig& c) { return fmt_uint(c.seeds.resample); });
        add("seeds", "model", [](RunConfig& c, const std::string& v) { c.seeds.model = to_u64(v); },
            [](const RunConfig& c) { return fmt_uint(c.seeds.model); });
        add("seeds", "explain", [](RunConfig& c, const std::string& v) { c.seeds.explain = to_u64(v); },
            [](const RunConfig& c) { return fmt_uint(c.seeds.explain); });
        return t;
    }();
    return table;
}

const Entry* find_entry(const std::string& section, const std::string& key) {
    for (const auto& e : entries())
        if (e.section == section && e.key == key) return &e;
    return nullptr;
}

void validate(RunConfig& c) {
    if (c.dataset_root.empty()) throw ConfigError("config: [dataset] root is required");
    try {
        Manifest({}, 0, c.ratios);  // validates the ratios
        c.hog.validate();
        if (c.hog_side % c.hog.cell_size != 0)
            throw ConfigError("config: [features] hog_side " + std::to_string(c.hog_side) +
                              " must be a multiple of cell_size " + std::to_string(c.hog.cell_size));
        if (c.hog.descriptor_length(c.hog_side, c.hog_side) == 0)
            throw ConfigError("config: [features] hog_side " + std::to_string(c.hog_side) +
                              " is smaller than one HOG block");
        cnn::CnnConfig probe = c.cnn;
        probe.input_side = c.cnn_side;
        cnn::layer_shapes(probe);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    const auto& s = c.resample_strategy;
    if (s != "off" && s != "smote1" && s != "smote2") {
        try {
            resampling::SamplingStrategy::parse(s);
        } catch (const Error& e) {
            throw ConfigError("config: [resample] strategy: expected off, smote1, smote2 or a class map (" +
                              std::string(e.what()) + ")");
        }
    }
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const fs::path& base_dir) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config: line " + std::to_string(e.line()) + ": " + e.message());
    }

    RunConfig c;
    bool seeds_given[4] = {false, false, false, false};
    for (const auto& [section, body] : tree) {
        const bool known_section =
            std::any_of(entries().begin(), entries().end(), [&](const Entry& x) { return x.section == section; });
        if (body.empty() && !body.data().empty())
            throw ConfigError("config: key '" + section + "' is outside any [section]");
        if (!known_section) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, node] : body) {
            const std::string where = "config: [" + section + "] " + key;
            const Entry* e = find_entry(section, key);
            if (!e) throw ConfigError(where + ": unknown key");
            std::string value = node.data();
            const auto b = value.find_first_not_of(" \t"), en = value.find_last_not_of(" \t");
            value = b == std::string::npos ? "" : value.substr(b, en - b + 1);
            try {
                e->set(c, value);
            } catch (const ConfigError& err) {
                // Helper messages start with "value: "; re-anchor them at the key.
                std::string msg = err.what();
                if (msg.rfind("value: ", 0) == 0) msg = msg.substr(7);
                throw ConfigError(where + ": " + msg);
            } catch (const UsageError& err) {
                throw ConfigError(where + ": " + err.what());
            }
            if (section == "seeds") {
                static const char* names[] = {"split", "resample", "model", "explain"};
                for (int i = 0; i < 4; ++i)
                    if (key == names[i]) seeds_given[i] = true;
            }
        }
    }

    const StageSeeds derived = StageSeeds::derive(c.seed);
    if (!seeds_given[0]) c.seeds.split = derived.split;
    if (!seeds_given[1]) c.seeds.resample = derived.resample;
    if (!seeds_given[2]) c.seeds.model = derived.model;
    if (!seeds_given[3]) c.seeds.explain = derived.explain;

    if (!base_dir.empty()) {
        if (c.dataset_root.is_relative() && !c.dataset_root.empty()) c.dataset_root = base_dir / c.dataset_root;
        if (c.output_dir.is_relative()) c.output_dir = base_dir / c.output_dir;
    }
    c.dataset_root = c.dataset_root.lexically_normal();
    c.output_dir = c.output_dir.lexically_normal();
    validate(c);
    return c;
}

RunConfig RunConfig::load(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const fs::path base = fs::absolute(file).parent_path();
    try {
        return parse(ss.str(), base);
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        if (msg.rfind("config: ", 0) == 0) msg = file.string() + ": " + msg.substr(8);
        throw ConfigError(msg);
    }
}

void RunConfig::override_seed(std::uint64_t new_seed) {
    seed = new_seed;
    seeds = StageSeeds::derive(new_seed);
}

std::string RunConfig::to_ini(bool include_output) const {
    std::string out, current;
    for (const auto& e : entries()) {
        if (!include_output && e.section == "run" && e.key == "output_dir") continue;
        if (e.section != current) {
            out += (out.empty() ? "[" : "\n[") + e.section + "]\n";
            current = e.section;
        }
        out += e.key + " = " + e.get(*this) + "\n";
    }
    return out;
}

std::string RunConfig::digest() const { return sha256_hex(to_ini(false)); }

std::string RunConfig::condition() const {
    if (resample_strategy == "off" || resample_strategy == "smote1" || resample_strategy == "smote2")
        return resample_strategy;
    return "custom";
}

features::Extractor RunConfig::extractor() const {
    if (model == ModelKind::Cnn) return {features::Extractor::Kind::Pixels, cnn_side, {}};
    return {features::Extractor::Kind::Hog, hog_side, hog};
}

}  // namespace cxr
