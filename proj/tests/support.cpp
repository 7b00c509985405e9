#include "support.hpp"

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace fs = std::filesystem;

namespace cxr::testing {

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "cxrtest-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

GrayImage random_image(Rng& rng, std::size_t width, std::size_t height, double lo, double hi) {
    GrayImage img(width, height);
    for (double& p : img.pixels()) p = uniform(rng, lo, hi);
    return img;
}

GrayImage random_u8_image(Rng& rng, std::size_t width, std::size_t height) {
    GrayImage img(width, height);
    for (double& p : img.pixels()) p = static_cast<double>(rng.uniform_index(256));
    return img;
}

Kernel3x3 random_kernel(Rng& rng, double lo, double hi) {
    Kernel3x3 k;
    for (double& c : k.coefficients) c = uniform(rng, lo, hi);
    return k;
}

features::FeatureMatrix gaussian_blobs(Rng& rng, const std::vector<std::size_t>& counts, std::size_t dim,
                                       double separation, double spread, std::vector<int>& labels) {
    features::FeatureMatrix X;
    X.dim = dim;
    X.descriptor_id = "test-blobs";
    labels.clear();
    std::vector<double> row(dim);
    for (std::size_t c = 0; c < counts.size(); ++c) {
        for (std::size_t i = 0; i < counts[c]; ++i) {
            for (std::size_t d = 0; d < dim; ++d)
                row[d] = (d % counts.size() == c ? separation : 0.0) + spread * rng.normal();
            X.append(row);
            labels.push_back(static_cast<int>(c));
        }
    }
    return X;
}

fs::path cli_path() { return CXR_CLI_PATH; }

int run_command(const std::string& command, std::string* output) {
    const std::string full = command + " 2>&1";
    FILE* pipe = ::popen(full.c_str(), "r");
    if (!pipe) return -1;
    std::array<char, 4096> buf{};
    std::string out;
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    const int status = ::pclose(pipe);
    if (output) *output = out;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace cxr::testing
