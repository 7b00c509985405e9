#include "cxr/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cxr/dataset.hpp"
#include "cxr/errors.hpp"
#include "cxr/rng.hpp"

namespace cxr::resampling {

namespace {

constexpr double kPresetReferenceCount = 1200.0;

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double t = a[j] - b[j];
        d += t * t;
    }
    return d;
}

std::map<int, std::vector<std::size_t>> rows_by_class(const std::vector<int>& y) {
    std::map<int, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < y.size(); ++i) out[y[i]].push_back(i);
    return out;
}

}  // namespace

SamplingStrategy SamplingStrategy::parse(std::string_view text) {
    SamplingStrategy s;
    std::istringstream is{std::string(text)};
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ArgumentError("strategy entry '" + item + "' is not key=count");
        const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        std::size_t count = 0;
        try {
            std::size_t used = 0;
            const long long v = std::stoll(value, &used);
            if (used != value.size() || v < 0) throw std::invalid_argument("count");
            count = static_cast<std::size_t>(v);
        } catch (const std::logic_error&) {
            throw ArgumentError("strategy entry '" + item + "' has an invalid count");
        }
        if (key == "all") {
            for (ClassLabel c : kAllClasses) s.targets[to_index(c)] = count;
            continue;
        }
        const auto c = parse_class(key);
        if (!c) throw ArgumentError("strategy entry '" + item + "' names an unknown class");
        s.targets[to_index(*c)] = count;
    }
    if (s.targets.empty()) throw ArgumentError("empty sampling strategy");
    return s;
}

std::string SamplingStrategy::to_string() const {
    std::string out;
    for (const auto& [cls, n] : targets) {
        if (!out.empty()) out += ',';
        out += std::string(class_key(class_from_index(cls))) + "=" + std::to_string(n);
    }
    return out;
}

std::vector<std::size_t> k_nearest_same_class(const features::FeatureMatrix& X, std::span<const std::size_t> rows,
                                              std::size_t i, std::size_t k) {
    if (rows.size() < 2) throw ArgumentError("k_nearest_same_class: need at least 2 rows");
    if (i >= rows.size()) throw ArgumentError("k_nearest_same_class: row index out of range");
    if (k < 1 || k > rows.size() - 1)
        throw ArgumentError("k_nearest_same_class: k must be in [1, " + std::to_string(rows.size() - 1) + "], got " +
                            std::to_string(k));

    const auto origin = X.row(rows[i]);
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(rows.size() - 1);
    for (std::size_t j = 0; j < rows.size(); ++j)
        if (j != i) cand.emplace_back(squared_distance(origin, X.row(rows[j])), j);
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    std::vector<std::size_t> out(k);
    for (std::size_t j = 0; j < k; ++j) out[j] = cand[j].second;
    return out;
}

SmoteResult fit_resample(const features::FeatureMatrix& X, const std::vector<int>& y,
                         const SamplingStrategy& strategy, const SmoteParams& params) {
    if (X.rows != y.size())
        throw DimensionError("fit_resample: " + std::to_string(X.rows) + " rows but " + std::to_string(y.size()) +
                             " labels");
    if (params.k_neighbors < 1) throw ArgumentError("fit_resample: k_neighbors must be >= 1");

    const auto by_class = rows_by_class(y);
    for (const auto& [cls, target] : strategy.targets) {
        const auto it = by_class.find(cls);
        const std::size_t have = it == by_class.end() ? 0 : it->second.size();
        if (target < have)
            throw ArgumentError("fit_resample: target " + std::to_string(target) + " for class " +
                                std::to_string(cls) + " is below its current count " + std::to_string(have) +
                                " (oversampling only)");
        if (target > have && have < 2)
            throw DataError("fit_resample: class " + std::to_string(cls) + " has " + std::to_string(have) +
                            " sample(s); at least 2 are needed to interpolate");
    }

    SmoteResult res;
    res.X = X;
    res.y = y;
    Rng rng(params.seed);

    for (const auto& [cls, target] : strategy.targets) {
        const auto it = by_class.find(cls);
        if (it == by_class.end() || target == it->second.size()) continue;
        const auto& rows = it->second;
        std::size_t k = params.k_neighbors;
        if (k > rows.size() - 1) {
            k = rows.size() - 1;
            res.warnings.push_back("class " + std::to_string(cls) + ": k_neighbors clipped from " +
                                   std::to_string(params.k_neighbors) + " to " + std::to_string(k));
        }

        // Neighbour lists are computed lazily; only drawn seed rows need them.
        std::vector<std::vector<std::size_t>> neighbours(rows.size());
        const std::size_t needed = target - rows.size();
        std::vector<double> synth(X.dim);
        for (std::size_t s = 0; s < needed; ++s) {
            const auto seed = static_cast<std::size_t>(rng.uniform_index(rows.size()));
            if (neighbours[seed].empty()) neighbours[seed] = k_nearest_same_class(X, rows, seed, k);
            const std::size_t nb = neighbours[seed][static_cast<std::size_t>(rng.uniform_index(k))];
            const double lambda = rng.uniform01();

            const auto a = X.row(rows[seed]), b = X.row(rows[nb]);
            for (std::size_t j = 0; j < X.dim; ++j) synth[j] = a[j] + lambda * (b[j] - a[j]);
            res.origins.push_back({res.X.rows, rows[seed], rows[nb], lambda});
            res.X.append(synth);
            res.y.push_back(cls);
        }
    }
    return res;
}

SamplingStrategy preset(std::string_view name, const std::vector<int>& y, bool absolute) {
    double target = 0.0;
    if (name == "smote1")
        target = 1200.0;
    else if (name == "smote2")
        target = 1500.0;
    else
        throw ArgumentError("unknown SMOTE preset '" + std::string(name) + "' (expected smote1 or smote2)");

    SamplingStrategy s;
    std::size_t largest = 0;
    for (const auto& [cls, rows] : rows_by_class(y)) largest = std::max(largest, rows.size());
    std::size_t count = static_cast<std::size_t>(target);
    if (!absolute)
        count = std::max(largest, static_cast<std::size_t>(std::llround(target / kPresetReferenceCount *
                                                                         static_cast<double>(largest))));
    for (ClassLabel c : kAllClasses) s.targets[to_index(c)] = count;
    return s;
}

}  // namespace cxr::resampling
