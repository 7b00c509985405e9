#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cxr {

/// The four diagnostic classes. The integer encoding is stable and is used by
/// every persisted artifact (feature sidecars, model files, metrics).
enum class ClassLabel : int { Normal = 0, LungOpacity = 1, Covid19 = 2, ViralPneumonia = 3 };

inline constexpr int kNumClasses = 4;
inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::Normal, ClassLabel::LungOpacity, ClassLabel::Covid19, ClassLabel::ViralPneumonia};

constexpr int to_index(ClassLabel c) { return static_cast<int>(c); }
ClassLabel class_from_index(int index);

/// Canonical display name: Normal, LungOpacity, Covid19, ViralPneumonia.
std::string_view class_name(ClassLabel c);
/// Short key used in CLI strategy maps and file names: normal, lung_opacity, covid, viral_pneumonia.
std::string_view class_key(ClassLabel c);

/// Accepts canonical names, keys and the directory spellings found in public
/// corpora (Lung-Opacity, COVID-19, Viral-Pneumonia, ...), case-insensitively.
std::optional<ClassLabel> parse_class(std::string_view text);

enum class Split { Unassigned, Train, Val, Test };

std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view text);

struct SampleRecord {
    std::filesystem::path path;
    ClassLabel label = ClassLabel::Normal;
    Split split = Split::Unassigned;
    std::string sha256;

    bool operator==(const SampleRecord&) const = default;
};

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;

    bool operator==(const SplitRatios&) const = default;
};

class Manifest {
public:
    Manifest() = default;
    /// Validates invariants: no duplicate paths, ratios sum to 1.
    Manifest(std::vector<SampleRecord> records, std::uint64_t seed = 0, SplitRatios ratios = {});

    const std::vector<SampleRecord>& records() const { return records_; }
    const std::map<ClassLabel, std::size_t>& class_counts() const { return class_counts_; }
    std::uint64_t seed() const { return seed_; }
    const SplitRatios& ratios() const { return ratios_; }

    std::size_t size() const { return records_.size(); }
    bool fully_assigned() const;

    /// SHA-256 over the sorted (path, split) pairs; equal digests mean equal assignments.
    std::string assignment_digest() const;

    /// CSV with a `# pipeline-manifest v1` header line, then `path,label,split,sha256`.
    void save(const std::filesystem::path& file) const;
    /// Relative paths in the file are resolved against the file's directory.
    static Manifest load(const std::filesystem::path& file);

    bool operator==(const Manifest&) const = default;

private:
    std::vector<SampleRecord> records_;
    std::map<ClassLabel, std::size_t> class_counts_;
    std::uint64_t seed_ = 0;
    SplitRatios ratios_;
};

/// Scans `root/<class dir>/` for PNG/PGM files. Records are ordered by class
/// encoding, then by file name. Files with other extensions are skipped.
/// Recorded paths are absolute.
Manifest ingest(const std::filesystem::path& root);

/// Per-class stratified assignment. Each class is shuffled with the seeded
/// stream (classes visited in encoding order); val and test get
/// floor(ratio * n) records and train receives the remainder.
Manifest split(const Manifest& manifest, SplitRatios ratios, std::uint64_t seed);

/// Records with the given split, in manifest order.
std::vector<SampleRecord> filter_split(const Manifest& manifest, Split which);

}  // namespace cxr
