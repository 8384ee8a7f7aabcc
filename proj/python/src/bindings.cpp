#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "polypseg/eval.hpp"
#include "polypseg/features.hpp"
#include "polypseg/image.hpp"
#include "polypseg/lssvm.hpp"
#include "polypseg/slic.hpp"

namespace py = pybind11;
using namespace polypseg;

namespace {

template <typename T>
using CArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

RgbFrame to_frame(const CArray<std::uint8_t>& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw std::invalid_argument("expected an (H, W, 3) uint8 array");
    const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
    return RgbFrame(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

Plane to_plane(const CArray<std::uint8_t>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected an (H, W) uint8 array");
    return Plane(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                 std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

slic::LabelMap to_labels(const CArray<std::int32_t>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected an (H, W) int32 label array");
    return {static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
            std::vector<std::int32_t>(a.data(), a.data() + a.size())};
}

eval::Mask to_mask(const CArray<bool>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected an (H, W) boolean mask");
    return {static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
            std::vector<std::uint8_t>(a.data(), a.data() + a.size())};
}

template <typename T, typename Span>
py::array_t<T> image_array(int w, int h, const Span& data) {
    py::array_t<T> out(std::vector<py::ssize_t>{h, w});
    std::copy(data.begin(), data.end(), out.mutable_data());
    return out;
}

py::array_t<bool> mask_array(const eval::Mask& m) {
    py::array_t<bool> out(std::vector<py::ssize_t>{m.height(), m.width()});
    std::transform(m.bits().begin(), m.bits().end(), out.mutable_data(), [](std::uint8_t b) { return b != 0; });
    return out;
}

lssvm::Matrix to_matrix(const CArray<double>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D feature matrix");
    lssvm::Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    m.values.assign(a.data(), a.data() + a.size());
    return m;
}

py::dict metrics_dict(const eval::MetricsReport& r) {
    py::dict d;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto v = r.values()[i];
        d[eval::metric_names()[i]] = v ? py::cast(*v) : py::none();
    }
    d["tp"] = r.counts.tp;
    d["fp"] = r.counts.fp;
    d["fn"] = r.counts.fn;
    d["tn"] = r.counts.tn;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Superpixel segmentation, texture features and LS-SVM classification for polyp frames";

    py::register_exception<lssvm::SingularSystem>(m, "SingularSystem", PyExc_RuntimeError);

    m.def("grayscale", [](const CArray<std::uint8_t>& img) {
        const Plane p = to_grayscale(to_frame(img));
        return image_array<std::uint8_t>(p.width(), p.height(), p.data());
    });
    m.def("hue", [](const CArray<std::uint8_t>& img) {
        const Plane p = to_hue(to_frame(img));
        return image_array<std::uint8_t>(p.width(), p.height(), p.data());
    });
    m.def("gradient", [](const CArray<std::uint8_t>& plane) {
        const GradientField g = gradient_magnitude(to_plane(plane));
        return image_array<double>(g.width(), g.height(), g.data());
    });

    m.def(
        "segment",
        [](const CArray<std::uint8_t>& img, int k, double compactness, int max_iters, bool enforce_connectivity) {
            slic::SlicParams p;
            p.k = k;
            p.compactness = compactness;
            p.max_iters = max_iters;
            p.enforce_connectivity = enforce_connectivity;
            const auto seg = slic::segment(to_frame(img), p);
            return image_array<std::int32_t>(seg.labels.width(), seg.labels.height(), seg.labels.labels());
        },
        py::arg("image"), py::arg("k"), py::arg("compactness") = 10.0, py::arg("max_iters") = 10,
        py::arg("enforce_connectivity") = true);
    m.def("grid_spacing", &slic::grid_spacing, py::arg("width"), py::arg("height"), py::arg("k"));
    m.def("max_superpixels", &slic::max_superpixels, py::arg("width"), py::arg("height"), py::arg("min_polyp_px"));

    m.def("feature_names", &features::feature_names);
    m.def(
        "extract_features",
        [](const CArray<std::uint8_t>& img, const CArray<std::int32_t>& labels, int levels) {
            const auto ff = features::extract_all(to_frame(img), to_labels(labels), levels);
            py::array_t<std::int32_t> ids(static_cast<py::ssize_t>(ff.rows.size()));
            py::array_t<double> values(std::vector<py::ssize_t>{static_cast<py::ssize_t>(ff.rows.size()),
                                        static_cast<py::ssize_t>(features::kFeatureCount)});
            for (std::size_t r = 0; r < ff.rows.size(); ++r) {
                ids.mutable_data()[r] = ff.rows[r].label;
                std::copy(ff.rows[r].values.begin(), ff.rows[r].values.end(),
                          values.mutable_data() + r * features::kFeatureCount);
            }
            return py::make_tuple(ids, values);
        },
        py::arg("image"), py::arg("labels"), py::arg("levels") = features::kDefaultGlcmLevels,
        "Returns (superpixel ids, feature matrix) with one row per kept superpixel.");

    py::class_<lssvm::TrainedModel>(m, "Model")
        .def_readonly("bias", &lssvm::TrainedModel::bias)
        .def_readonly("alpha", &lssvm::TrainedModel::alpha)
        .def_readonly("sigma", &lssvm::TrainedModel::sigma)
        .def_readonly("gamma", &lssvm::TrainedModel::gamma)
        .def_readonly("residual", &lssvm::TrainedModel::residual)
        .def("decision_function",
             [](const lssvm::TrainedModel& model, const CArray<double>& x) {
                 const lssvm::Matrix rows = to_matrix(x);
                 py::array_t<double> out(static_cast<py::ssize_t>(rows.rows));
                 for (std::size_t i = 0; i < rows.rows; ++i) out.mutable_data()[i] = lssvm::predict_score(model, rows.row(i));
                 return out;
             })
        .def("predict",
             [](const lssvm::TrainedModel& model, const CArray<double>& x) {
                 const lssvm::Matrix rows = to_matrix(x);
                 py::array_t<bool> out(static_cast<py::ssize_t>(rows.rows));
                 for (std::size_t i = 0; i < rows.rows; ++i)
                     out.mutable_data()[i] = lssvm::predict_label(model, rows.row(i)) == lssvm::Label::Polyp;
                 return out;
             })
        .def("to_json", [](const lssvm::TrainedModel& model) {
            return lssvm::to_json(model, features::feature_order_hash()).dump();
        });

    m.def(
        "train",
        [](const CArray<double>& x, const CArray<bool>& polyp, double gamma, std::optional<double> sigma,
           double weight_polyp) {
            const lssvm::Matrix raw = to_matrix(x);
            if (polyp.ndim() != 1 || static_cast<std::size_t>(polyp.shape(0)) != raw.rows)
                throw std::invalid_argument("expected one boolean label per row");
            std::vector<lssvm::Label> y;
            for (py::ssize_t i = 0; i < polyp.shape(0); ++i)
                y.push_back(polyp.data()[i] ? lssvm::Label::Polyp : lssvm::Label::Normal);
            lssvm::TrainConfig cfg;
            cfg.gamma = gamma;
            cfg.sigma = sigma.value_or(lssvm::default_sigma(raw.cols));
            cfg.weight_polyp = weight_polyp;
            return lssvm::fit(raw, y, cfg);
        },
        py::arg("x"), py::arg("polyp"), py::arg("gamma") = 10.0, py::arg("sigma") = py::none(),
        py::arg("weight_polyp") = 1.0, "Min-max normalizes x, then solves the LS-SVM system.");
    m.def("model_from_json", [](const std::string& text) {
        return lssvm::from_json(nlohmann::json::parse(text), features::feature_order_hash());
    });

    m.def(
        "oracle_segmentation",
        [](const CArray<std::int32_t>& labels, const CArray<bool>& truth, double tau) {
            return mask_array(eval::oracle_segmentation(to_labels(labels), to_mask(truth), tau));
        },
        py::arg("labels"), py::arg("truth"), py::arg("tau") = 0.5);
    m.def("pixel_metrics", [](const CArray<bool>& pred, const CArray<bool>& truth) {
        return metrics_dict(eval::pixel_metrics(to_mask(pred), to_mask(truth)));
    });
    m.def(
        "metrics_from_counts",
        [](std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
            return metrics_dict(eval::MetricsReport::from_counts({tp, fp, fn, tn}, eval::Granularity::Frame));
        },
        py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn"));
}
