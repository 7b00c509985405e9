#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cxr/errors.hpp"
#include "cxr/explain.hpp"
#include "cxr/features.hpp"
#include "cxr/forest.hpp"
#include "cxr/imaging.hpp"
#include "cxr/metrics.hpp"
#include "cxr/model_io.hpp"
#include "cxr/resampling.hpp"
#include "cxr/svm.hpp"

namespace py = pybind11;
using namespace cxr;

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

namespace {

GrayImage to_image(const Array& a) {
    if (a.ndim() != 2) throw ArgumentError("expected a 2-D image array");
    const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
    return GrayImage(w, h, std::vector<double>(a.data(), a.data() + w * h));
}

Array from_image(const GrayImage& img) {
    Array out({img.height(), img.width()});
    std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
    return out;
}

features::FeatureMatrix to_matrix(const Array& a) {
    if (a.ndim() != 2) throw ArgumentError("expected a 2-D feature array");
    features::FeatureMatrix m;
    m.rows = static_cast<std::size_t>(a.shape(0));
    m.dim = static_cast<std::size_t>(a.shape(1));
    m.values.assign(a.data(), a.data() + m.rows * m.dim);
    return m;
}

Array from_matrix(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
    Array out({rows, cols});
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

std::vector<int> to_labels(const IntArray& a) {
    if (a.ndim() != 1) throw ArgumentError("expected a 1-D label array");
    return std::vector<int>(a.data(), a.data() + a.shape(0));
}

template <class Predict>
Array predict_rows(const Array& X, std::size_t classes, Predict predict) {
    const auto m = to_matrix(X);
    std::vector<double> out;
    out.reserve(m.rows * classes);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const auto p = predict(m.row(i));
        out.insert(out.end(), p.scores.begin(), p.scores.end());
    }
    return from_matrix(out, m.rows, classes);
}

py::dict report_dict(const metrics::MetricsReport& r) {
    py::dict d;
    d["accuracy"] = r.accuracy;
    d["macro_precision"] = r.macro_precision;
    d["macro_recall"] = r.macro_recall;
    d["macro_f1"] = r.macro_f1;
    d["precision"] = r.precision;
    d["recall"] = r.recall;
    d["f1"] = r.f1;
    d["support"] = r.support;
    return d;
}

}  // namespace

PYBIND11_MODULE(_cxrpipe, m) {
    m.doc() = "Chest X-ray pipeline primitives";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    m.def(
        "enhance", [](const Array& img, double gamma) { return from_image(imaging::enhance(to_image(img), gamma).image); },
        py::arg("image"), py::arg("gamma") = imaging::kDefaultGamma,
        "Laplacian/Sobel enhancement followed by the power-law transform.");

    m.def(
        "hog",
        [](const Array& img, std::size_t cell_size, std::size_t block_size, std::size_t block_stride,
           std::size_t orientations, bool signed_gradients, double clip) {
            features::HogParams p{cell_size, block_size, block_stride, orientations, signed_gradients, clip};
            const auto v = features::hog(to_image(img), p);
            Array out(static_cast<py::ssize_t>(v.values.size()));
            std::copy(v.values.begin(), v.values.end(), out.mutable_data());
            return out;
        },
        py::arg("image"), py::arg("cell_size") = 8, py::arg("block_size") = 2, py::arg("block_stride") = 1,
        py::arg("orientations") = 9, py::arg("signed_gradients") = false, py::arg("clip") = 0.2);

    m.def(
        "fit_resample",
        [](const Array& X, const IntArray& y, const std::string& strategy, bool absolute, std::size_t k_neighbors,
           std::uint64_t seed) {
            const auto labels = to_labels(y);
            const auto s = strategy == "smote1" || strategy == "smote2" ? resampling::preset(strategy, labels, absolute)
                                                                         : resampling::SamplingStrategy::parse(strategy);
            const auto res = resampling::fit_resample(to_matrix(X), labels, s, {k_neighbors, seed});
            IntArray out_y(static_cast<py::ssize_t>(res.y.size()));
            std::copy(res.y.begin(), res.y.end(), out_y.mutable_data());
            return py::make_tuple(from_matrix(res.X.values, res.X.rows, res.X.dim), out_y);
        },
        py::arg("X"), py::arg("y"), py::arg("strategy"), py::arg("absolute") = false, py::arg("k_neighbors") = 5,
        py::arg("seed") = 0,
        "SMOTE oversampling. strategy is smote1, smote2, all=N or class=N,...; originals come first.");

    py::class_<svm::SvmModel>(m, "SvmModel")
        .def_readonly("n_classes", &svm::SvmModel::n_classes)
        .def_readonly("dim", &svm::SvmModel::dim)
        .def("predict_proba",
             [](const svm::SvmModel& model, const Array& X) {
                 return predict_rows(X, model.n_classes, [&](auto row) { return svm::predict_svm(model, row); });
             })
        .def("support_counts", [](const svm::SvmModel& model) {
            std::vector<std::size_t> out;
            for (const auto& mach : model.machines) out.push_back(mach.support_count());
            return out;
        });

    m.def(
        "train_svm",
        [](const Array& X, const IntArray& y, double C, const std::string& kernel, double gamma, double tol,
           std::uint64_t seed) {
            svm::SvmParams p;
            p.C = C;
            if (kernel == "linear")
                p.kernel.type = svm::KernelSpec::Type::Linear;
            else if (kernel != "rbf")
                throw ArgumentError("kernel must be linear or rbf, got '" + kernel + "'");
            p.kernel.gamma = gamma;
            p.tol = tol;
            p.seed = seed;
            return svm::train_svm(to_matrix(X), to_labels(y), p);
        },
        py::arg("X"), py::arg("y"), py::arg("C") = 1.0, py::arg("kernel") = "rbf", py::arg("gamma") = 0.0,
        py::arg("tol") = 1e-3, py::arg("seed") = 0);

    py::class_<forest::ForestModel>(m, "ForestModel")
        .def_readonly("n_classes", &forest::ForestModel::n_classes)
        .def_readonly("dim", &forest::ForestModel::dim)
        .def_property_readonly("n_trees", [](const forest::ForestModel& f) { return f.trees.size(); })
        .def("predict_proba", [](const forest::ForestModel& model, const Array& X) {
            return predict_rows(X, model.n_classes, [&](auto row) { return forest::predict_forest(model, row); });
        });

    m.def(
        "train_forest",
        [](const Array& X, const IntArray& y, std::size_t n_trees, std::size_t max_depth, std::size_t threads,
           std::uint64_t seed) {
            forest::ForestParams p;
            p.n_trees = n_trees;
            p.max_depth = max_depth;
            p.threads = threads;
            p.seed = seed;
            return forest::train_forest(to_matrix(X), to_labels(y), p);
        },
        py::arg("X"), py::arg("y"), py::arg("n_trees") = 100, py::arg("max_depth") = 0, py::arg("threads") = 1,
        py::arg("seed") = 0);

    m.def(
        "save_model",
        [](const py::object& model, const std::string& path) {
            if (py::isinstance<svm::SvmModel>(model))
                save_model(Model(model.cast<svm::SvmModel>()), path);
            else if (py::isinstance<forest::ForestModel>(model))
                save_model(Model(model.cast<forest::ForestModel>()), path);
            else
                throw ArgumentError("save_model expects an SvmModel or ForestModel");
        },
        py::arg("model"), py::arg("path"));

    m.def(
        "load_model",
        [](const std::string& path) -> py::object {
            Model model = load_model(path);
            if (auto* s = std::get_if<svm::SvmModel>(&model)) return py::cast(std::move(*s));
            if (auto* f = std::get_if<forest::ForestModel>(&model)) return py::cast(std::move(*f));
            throw TypeError("load_model: CNN models are not exposed to Python");
        },
        py::arg("path"));

    m.def(
        "metrics_report",
        [](const IntArray& y_true, const IntArray& y_pred, std::size_t classes) {
            return report_dict(metrics::report(metrics::confusion(to_labels(y_true), to_labels(y_pred), classes)));
        },
        py::arg("y_true"), py::arg("y_pred"), py::arg("classes") = 4);

    m.def(
        "lime",
        [](const Array& img, const std::function<std::vector<double>(Array)>& classifier, int target,
           std::size_t grid, std::size_t num_samples, double ridge, std::uint64_t seed) {
            explain::LimeParams p;
            p.grid = grid;
            p.num_samples = num_samples;
            p.ridge = ridge;
            p.seed = seed;
            const explain::ImageClassifier model = [&](const GrayImage& x) { return classifier(from_image(x)); };
            const auto e = explain::explain_instance(to_image(img), model, target, p);
            py::dict d;
            d["class_id"] = e.class_id;
            d["weights"] = e.segment_weights;
            d["intercept"] = e.intercept;
            d["fidelity_r2"] = e.fidelity_r2;
            return d;
        },
        py::arg("image"), py::arg("classifier"), py::arg("target"), py::arg("grid") = 8, py::arg("num_samples") = 1000,
        py::arg("ridge") = 1.0, py::arg("seed") = 0,
        "classifier maps a 2-D image array to a list of class probabilities.");

    m.def(
        "overlay",
        [](const Array& img, const std::vector<double>& weights, std::size_t grid, std::size_t top_k) {
            const GrayImage g = to_image(img);
            explain::Explanation e;
            e.segment_weights = weights;
            const auto rgb = explain::render_overlay(g, explain::segment(g, grid), e, top_k);
            Array out({rgb.height(), rgb.width(), std::size_t{3}});
            std::copy(rgb.data().begin(), rgb.data().end(), out.mutable_data());
            return out;
        },
        py::arg("image"), py::arg("weights"), py::arg("grid") = 8, py::arg("top_k") = 10);
}
