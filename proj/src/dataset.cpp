#include "cxr/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cxr/digest.hpp"
#include "cxr/errors.hpp"
#include "cxr/rng.hpp"

namespace cxr {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kManifestHeader = "# pipeline-manifest v1";

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_image_file(const fs::path& p) {
    const std::string ext = lower(p.extension().string());
    return ext == ".png" || ext == ".pgm";
}

// Values are written with up to 17 significant digits so they round-trip.
std::string format_ratio(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void validate_ratios(const SplitRatios& r) {
    for (double v : {r.train, r.val, r.test})
        if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError("split ratios must be non-negative");
    if (!(r.train > 0.0)) throw ArgumentError("train ratio must be positive");
    if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
        throw ArgumentError("split ratios must sum to 1 (got " + format_ratio(r.train + r.val + r.test) + ")");
}

}  // namespace

ClassLabel class_from_index(int index) {
    if (index < 0 || index >= kNumClasses)
        throw ArgumentError("class index out of range: " + std::to_string(index));
    return static_cast<ClassLabel>(index);
}

std::string_view class_name(ClassLabel c) {
    switch (c) {
        case ClassLabel::Normal: return "Normal";
        case ClassLabel::LungOpacity: return "LungOpacity";
        case ClassLabel::Covid19: return "Covid19";
        case ClassLabel::ViralPneumonia: return "ViralPneumonia";
    }
    return "?";
}

std::string_view class_key(ClassLabel c) {
    switch (c) {
        case ClassLabel::Normal: return "normal";
        case ClassLabel::LungOpacity: return "lung_opacity";
        case ClassLabel::Covid19: return "covid";
        case ClassLabel::ViralPneumonia: return "viral_pneumonia";
    }
    return "?";
}

std::optional<ClassLabel> parse_class(std::string_view text) {
    static const std::map<std::string, ClassLabel> kTable = {
        {"normal", ClassLabel::Normal},
        {"lung-opacity", ClassLabel::LungOpacity},
        {"lung_opacity", ClassLabel::LungOpacity},
        {"lungopacity", ClassLabel::LungOpacity},
        {"covid", ClassLabel::Covid19},
        {"covid-19", ClassLabel::Covid19},
        {"covid19", ClassLabel::Covid19},
        {"covid_19", ClassLabel::Covid19},
        {"viral-pneumonia", ClassLabel::ViralPneumonia},
        {"viral_pneumonia", ClassLabel::ViralPneumonia},
        {"viralpneumonia", ClassLabel::ViralPneumonia},
    };
    const auto it = kTable.find(lower(text));
    if (it == kTable.end()) return std::nullopt;
    return it->second;
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Unassigned: return "unassigned";
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

std::optional<Split> parse_split(std::string_view text) {
    for (Split s : {Split::Unassigned, Split::Train, Split::Val, Split::Test})
        if (split_name(s) == text) return s;
    return std::nullopt;
}

Manifest::Manifest(std::vector<SampleRecord> records, std::uint64_t seed, SplitRatios ratios)
    : records_(std::move(records)), seed_(seed), ratios_(ratios) {
    validate_ratios(ratios_);
    std::set<fs::path> seen;
    for (const auto& r : records_) {
        if (!seen.insert(r.path).second) throw DataError("duplicate manifest path: " + r.path.string());
        ++class_counts_[r.label];
    }
}

bool Manifest::fully_assigned() const {
    return !records_.empty() &&
           std::none_of(records_.begin(), records_.end(),
                        [](const SampleRecord& r) { return r.split == Split::Unassigned; });
}

std::string Manifest::assignment_digest() const {
    std::vector<std::string> lines;
    lines.reserve(records_.size());
    for (const auto& r : records_) lines.push_back(r.path.string() + "\t" + std::string(split_name(r.split)));
    std::sort(lines.begin(), lines.end());
    std::string joined;
    for (const auto& l : lines) joined += l + "\n";
    return sha256_hex(joined);
}

void Manifest::save(const fs::path& file) const {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write manifest: " + file.string());
    out << kManifestHeader << " seed=" << seed_ << " ratios=" << format_ratio(ratios_.train) << ','
        << format_ratio(ratios_.val) << ',' << format_ratio(ratios_.test) << " prng=" << Rng::kAlgorithm << '\n';
    out << "path,label,split,sha256\n";
    for (const auto& r : records_)
        out << csv_cell(r.path.string()) << ',' << class_name(r.label) << ',' << split_name(r.split) << ','
            << r.sha256 << '\n';
    if (!out) throw DataError("write failure: " + file.string());
}

Manifest Manifest::load(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read manifest: " + file.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind(kManifestHeader, 0) != 0)
        throw FormatError("manifest: missing '" + std::string(kManifestHeader) + "' header in " + file.string());

    std::uint64_t seed = 0;
    SplitRatios ratios;
    std::istringstream header(line.substr(kManifestHeader.size()));
    std::string field;
    while (header >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
        try {
            if (key == "seed") {
                seed = std::stoull(value);
            } else if (key == "ratios") {
                const auto parts = split_csv_line(value);
                if (parts.size() != 3) throw FormatError("manifest: ratios must have three values");
                ratios = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
            }
        } catch (const std::logic_error&) {
            throw FormatError("manifest: malformed header field '" + field + "' in " + file.string());
        }
    }

    if (!std::getline(in, line) || line != "path,label,split,sha256")
        throw FormatError("manifest: expected column header 'path,label,split,sha256' in " + file.string());

    std::vector<SampleRecord> records;
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const auto where = file.string() + ":" + std::to_string(line_no);
        if (cells.size() != 4) throw FormatError("manifest: expected 4 columns at " + where);
        const auto label = parse_class(cells[1]);
        if (!label) throw FormatError("manifest: unknown label '" + cells[1] + "' at " + where);
        const auto split = parse_split(cells[2]);
        if (!split) throw FormatError("manifest: unknown split '" + cells[2] + "' at " + where);
        fs::path path = cells[0];
        if (path.is_relative()) path = file.parent_path() / path;
        records.push_back({path, *label, *split, cells[3]});
    }
    return Manifest(std::move(records), seed, ratios);
}

Manifest ingest(const fs::path& root_arg) {
    const fs::path root = fs::absolute(root_arg).lexically_normal();
    if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root.string());

    std::map<ClassLabel, std::vector<fs::path>> files;
    std::vector<std::string> unknown;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (name.starts_with('.')) continue;
        const auto label = parse_class(name);
        if (!label) {
            unknown.push_back(name);
            continue;
        }
        auto& bucket = files[*label];
        for (const auto& f : fs::directory_iterator(entry.path()))
            if (f.is_regular_file() && is_image_file(f.path()) && !f.path().filename().string().starts_with('.'))
                bucket.push_back(f.path());
    }
    if (!unknown.empty()) {
        std::sort(unknown.begin(), unknown.end());
        std::string list;
        for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
        throw DataError("unknown class directory: " + list);
    }

    std::vector<SampleRecord> records;
    for (ClassLabel c : kAllClasses) {
        auto it = files.find(c);
        if (it == files.end() || it->second.empty())
            throw DataError("class has no images: " + std::string(class_name(c)));
        auto& paths = it->second;
        std::sort(paths.begin(), paths.end());
        for (const auto& p : paths) records.push_back({p, c, Split::Unassigned, sha256_file(p)});
    }
    return Manifest(std::move(records));
}

Manifest split(const Manifest& manifest, SplitRatios ratios, std::uint64_t seed) {
    validate_ratios(ratios);
    Rng rng(seed);
    std::vector<SampleRecord> records = manifest.records();

    for (ClassLabel c : kAllClasses) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].label == c) idx.push_back(i);
        if (idx.empty()) continue;

        // Fisher-Yates with the portable index draw.
        for (std::size_t i = idx.size() - 1; i > 0; --i)
            std::swap(idx[i], idx[static_cast<std::size_t>(rng.uniform_index(i + 1))]);

        const std::size_t n = idx.size();
        // The epsilon absorbs representation error such as 0.1 * 30 = 3.0000000000000004.
        const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n) + 1e-9));
        const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n) + 1e-9));
        const auto n_train_floor = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n) + 1e-9));
        if ((ratios.val > 0 && n_val == 0) || (ratios.test > 0 && n_test == 0) || n_train_floor == 0 ||
            n_val + n_test >= n)
            throw DataError("class " + std::string(class_name(c)) + " has " + std::to_string(n) +
                            " samples, too few to place at least one in every non-empty split");

        for (std::size_t k = 0; k < n; ++k) {
            Split s = Split::Train;
            if (k < n_val)
                s = Split::Val;
            else if (k < n_val + n_test)
                s = Split::Test;
            records[idx[k]].split = s;
        }
    }
    return Manifest(std::move(records), seed, ratios);
}

std::vector<SampleRecord> filter_split(const Manifest& manifest, Split which) {
    if (!manifest.fully_assigned()) throw DataError("manifest has unassigned records; run split first");
    std::vector<SampleRecord> out;
    for (const auto& r : manifest.records())
        if (r.split == which) out.push_back(r);
    return out;
}

}  // namespace cxr
