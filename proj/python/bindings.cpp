#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mammo/artifact.hpp"
#include "mammo/classifiers.hpp"
#include "mammo/dataset.hpp"
#include "mammo/dicom.hpp"
#include "mammo/imageops.hpp"
#include "mammo/metrics.hpp"
#include "mammo/numcore.hpp"
#include "mammo/sketch.hpp"

namespace py = pybind11;
using namespace mammo;

namespace {

NormalizedImage image_from_array(const py::array_t<double, py::array::c_style>& arr) {
    if (arr.ndim() != 2) throw py::value_error("expected a 2-D array");
    NormalizedImage img;
    img.rows = static_cast<std::size_t>(arr.shape(0));
    img.columns = static_cast<std::size_t>(arr.shape(1));
    img.values.assign(arr.data(), arr.data() + arr.size());
    return img;
}

py::array_t<double> array_from_image(const NormalizedImage& img) {
    py::array_t<double> out({img.rows, img.columns});
    std::copy(img.values.begin(), img.values.end(), out.mutable_data());
    return out;
}

PixelMatrix pixels_from_array(const py::array_t<std::uint16_t, py::array::c_style>& arr,
                              int bits_stored) {
    if (arr.ndim() != 2) throw py::value_error("expected a 2-D array");
    PixelMatrix m;
    m.rows = static_cast<std::size_t>(arr.shape(0));
    m.columns = static_cast<std::size_t>(arr.shape(1));
    m.bits_stored = bits_stored;
    m.values.assign(arr.data(), arr.data() + arr.size());
    return m;
}

Vec vec_from_array(const py::array_t<double, py::array::c_style>& arr) {
    if (arr.ndim() != 1) throw py::value_error("expected a 1-D array");
    return Vec(arr.data(), arr.data() + arr.size());
}

std::vector<Example> examples_from_arrays(const py::array_t<double, py::array::c_style>& x,
                                          const py::array_t<double, py::array::c_style>& y) {
    if (x.ndim() != 2 || y.ndim() != 1 || x.shape(0) != y.shape(0))
        throw py::value_error("expected X of shape (n, d) and y of shape (n,)");
    const std::size_t n = static_cast<std::size_t>(x.shape(0));
    const std::size_t d = static_cast<std::size_t>(x.shape(1));
    std::vector<Example> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].x.assign(x.data() + i * d, x.data() + (i + 1) * d);
        out[i].y = y.data()[i] > 0.5 ? 1.0 : 0.0;
        out[i].patient_id = "p" + std::to_string(i);
        out[i].image_id = "i" + std::to_string(i);
    }
    return out;
}

template <typename Model>
py::array_t<double> batch_predict(const Model& model,
                                  const py::array_t<double, py::array::c_style>& x,
                                  double (*predict)(const Model&, std::span<const double>)) {
    if (x.ndim() != 2) throw py::value_error("expected a 2-D array");
    const std::size_t n = static_cast<std::size_t>(x.shape(0));
    const std::size_t d = static_cast<std::size_t>(x.shape(1));
    py::array_t<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out.mutable_data()[i] = predict(model, {x.data() + i * d, d});
    return out;
}

py::dict report_to_dict(const EvalReport& r) {
    py::dict d;
    d["pf1"] = r.pf1;
    d["p_precision"] = r.p_precision;
    d["p_recall"] = r.p_recall;
    d["auroc"] = r.auroc;
    d["accuracy"] = r.accuracy;
    d["precision"] = r.binary_precision;
    d["recall"] = r.binary_recall;
    d["f1"] = r.binary_f1;
    d["tp"] = r.confusion.tp;
    d["fp"] = r.confusion.fp;
    d["tn"] = r.confusion.tn;
    d["fn"] = r.confusion.fn;
    d["n"] = r.n;
    d["threshold"] = r.threshold;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Screening mammography classification pipeline (C++ core)";

    py::register_exception<Error>(m, "MammoError");

    // --- image preprocessing -------------------------------------------------
    m.def(
        "normalize_minmax",
        [](const py::array_t<std::uint16_t, py::array::c_style>& arr, int bits_stored) {
            return array_from_image(normalize_minmax(pixels_from_array(arr, bits_stored)));
        },
        py::arg("pixels"), py::arg("bits_stored") = 16);
    m.def("invert",
          [](const py::array_t<double, py::array::c_style>& arr) {
              return array_from_image(invert(image_from_array(arr)));
          });
    m.def(
        "resize",
        [](const py::array_t<double, py::array::c_style>& arr, std::size_t rows,
           std::size_t cols) { return array_from_image(resize(image_from_array(arr), rows, cols)); },
        py::arg("image"), py::arg("rows") = kTargetSize, py::arg("cols") = kTargetSize);
    m.def(
        "preprocess",
        [](const py::array_t<std::uint16_t, py::array::c_style>& arr, const std::string& photo,
           int bits_stored) {
            const Photometric p =
                photo == "MONOCHROME1" ? Photometric::Monochrome1 : Photometric::Monochrome2;
            return array_from_image(preprocess(pixels_from_array(arr, bits_stored), p));
        },
        py::arg("pixels"), py::arg("photometric") = "MONOCHROME2", py::arg("bits_stored") = 16);

    // --- numeric core --------------------------------------------------------
    m.def("relu", [](const py::array_t<double, py::array::c_style>& z) {
        const Vec out = relu(vec_from_array(z));
        py::array_t<double> arr(out.size());
        std::copy(out.begin(), out.end(), arr.mutable_data());
        return arr;
    });
    m.def("sigmoid", [](const py::array_t<double, py::array::c_style>& z) {
        const Vec out = sigmoid(vec_from_array(z));
        py::array_t<double> arr(out.size());
        std::copy(out.begin(), out.end(), arr.mutable_data());
        return arr;
    });
    m.def(
        "bce_loss",
        [](const py::array_t<double, py::array::c_style>& y_hat,
           const py::array_t<double, py::array::c_style>& y, double w_neg, double w_pos) {
            return bce_loss(vec_from_array(y_hat), vec_from_array(y), LossSpec{w_neg, w_pos});
        },
        py::arg("y_hat"), py::arg("y"), py::arg("w_neg") = 1.0, py::arg("w_pos") = 1.0);

    // --- metrics -------------------------------------------------------------
    m.def("p_precision",
          [](const py::array_t<double, py::array::c_style>& p,
             const py::array_t<double, py::array::c_style>& y) {
              return p_precision(vec_from_array(p), vec_from_array(y));
          });
    m.def("p_recall", [](const py::array_t<double, py::array::c_style>& p,
                         const py::array_t<double, py::array::c_style>& y) {
        return p_recall(vec_from_array(p), vec_from_array(y));
    });
    m.def("p_f1", [](const py::array_t<double, py::array::c_style>& p,
                     const py::array_t<double, py::array::c_style>& y) {
        return p_f1(vec_from_array(p), vec_from_array(y));
    });
    m.def("auroc", [](const py::array_t<double, py::array::c_style>& p,
                      const py::array_t<double, py::array::c_style>& y) {
        return auroc(vec_from_array(p), vec_from_array(y));
    });
    m.def(
        "evaluate",
        [](const py::array_t<double, py::array::c_style>& p,
           const py::array_t<double, py::array::c_style>& y, double tau) {
            return report_to_dict(evaluate(vec_from_array(p), vec_from_array(y), tau));
        },
        py::arg("probs"), py::arg("labels"), py::arg("tau") = 0.5);

    // --- kernel sketch -------------------------------------------------------
    py::class_<SketchDef>(m, "SketchDef")
        .def_readonly("gamma", &SketchDef::gamma)
        .def_readonly("c0", &SketchDef::c0)
        .def_readonly("degree", &SketchDef::degree)
        .def_readonly("dim", &SketchDef::dim)
        .def_readonly("input_dim", &SketchDef::input_dim);
    m.def("sketch_fit", &sketch_fit, py::arg("gamma"), py::arg("c0"), py::arg("degree"),
          py::arg("dim"), py::arg("seed"), py::arg("input_dim"));
    m.def("sketch_transform", [](const SketchDef& def,
                                 const py::array_t<double, py::array::c_style>& x) {
        const Vec out = sketch_transform(def, vec_from_array(x));
        py::array_t<double> arr(out.size());
        std::copy(out.begin(), out.end(), arr.mutable_data());
        return arr;
    });
    m.def("poly_kernel",
          [](double gamma, double c0, int degree,
             const py::array_t<double, py::array::c_style>& x,
             const py::array_t<double, py::array::c_style>& z) {
              return poly_kernel(gamma, c0, degree, vec_from_array(x), vec_from_array(z));
          });

    // --- dataset helpers -----------------------------------------------------
    m.def("sbs_quotas", &sbs_quotas, py::arg("n_neg"), py::arg("n_pos"), py::arg("batch_size"));
    py::class_<StratifiedBatchSampler>(m, "StratifiedBatchSampler")
        .def(py::init<std::vector<std::uint8_t>, std::size_t, std::uint64_t>(),
             py::arg("labels"), py::arg("batch_size"), py::arg("seed"))
        .def("next_batch", &StratifiedBatchSampler::next_batch)
        .def_property_readonly("quota_neg", &StratifiedBatchSampler::quota_neg)
        .def_property_readonly("quota_pos", &StratifiedBatchSampler::quota_pos);

    // --- models --------------------------------------------------------------
    py::class_<LogisticModel>(m, "LogisticModel")
        .def_readonly("w0", &LogisticModel::w0)
        .def_property_readonly("w",
                               [](const LogisticModel& model) {
                                   py::array_t<double> arr(model.w.size());
                                   std::copy(model.w.begin(), model.w.end(),
                                             arr.mutable_data());
                                   return arr;
                               })
        .def("predict_proba", [](const LogisticModel& model,
                                 const py::array_t<double, py::array::c_style>& x) {
            return batch_predict<LogisticModel>(model, x, [](const LogisticModel& m2,
                                                             std::span<const double> row) {
                return lr_predict_proba(m2, row);
            });
        });
    m.def(
        "train_logistic",
        [](const py::array_t<double, py::array::c_style>& x,
           const py::array_t<double, py::array::c_style>& y, double C, double w_neg,
           double w_pos, std::size_t max_iters, double eta) {
            LrTrainConfig cfg;
            cfg.C = C;
            cfg.class_weights = {w_neg, w_pos};
            cfg.stop.max_iters = max_iters;
            cfg.eta = eta;
            return lr_train(examples_from_arrays(x, y), cfg).model;
        },
        py::arg("X"), py::arg("y"), py::arg("C") = 1.0, py::arg("w_neg") = 1.0,
        py::arg("w_pos") = 1.0, py::arg("max_iters") = 500, py::arg("eta") = 3e-3);

    py::class_<SketchSVM>(m, "SketchSVM")
        .def_readonly("b", &SketchSVM::b)
        .def_readonly("calib_a", &SketchSVM::calib_a)
        .def_readonly("calib_c", &SketchSVM::calib_c)
        .def("decision",
             [](const SketchSVM& model, const py::array_t<double, py::array::c_style>& x) {
                 return batch_predict<SketchSVM>(
                     model, x, [](const SketchSVM& m2, std::span<const double> row) {
                         return svm_decision(m2, row);
                     });
             })
        .def("predict_proba", [](const SketchSVM& model,
                                 const py::array_t<double, py::array::c_style>& x) {
            return batch_predict<SketchSVM>(model, x,
                                            [](const SketchSVM& m2, std::span<const double> row) {
                                                return svm_predict_proba(m2, row);
                                            });
        });
    m.def(
        "train_svm",
        [](const py::array_t<double, py::array::c_style>& x,
           const py::array_t<double, py::array::c_style>& y, double C, double gamma, double c0,
           int degree, std::size_t sketch_dim, std::size_t batch_size, std::size_t max_iters,
           std::uint64_t seed) {
            SvmTrainConfig cfg;
            cfg.C = C;
            cfg.gamma = gamma;
            cfg.c0 = c0;
            cfg.degree = degree;
            cfg.sketch_dim = sketch_dim;
            cfg.batch_size = batch_size;
            cfg.max_iters = max_iters;
            cfg.seed = seed;
            return svm_train(examples_from_arrays(x, y), cfg).model;
        },
        py::arg("X"), py::arg("y"), py::arg("C") = 1.0, py::arg("gamma") = 0.1,
        py::arg("c0") = 1.0, py::arg("degree") = 3, py::arg("sketch_dim") = 512,
        py::arg("batch_size") = 64, py::arg("max_iters") = 1000, py::arg("seed") = 0);

    py::class_<TwoBranchDNN>(m, "TwoBranchDNN")
        .def_property_readonly("parameter_count", &TwoBranchDNN::parameter_count)
        .def_property_readonly("input_dim", &TwoBranchDNN::input_dim)
        .def("predict_proba", [](const TwoBranchDNN& model,
                                 const py::array_t<double, py::array::c_style>& x) {
            return batch_predict<TwoBranchDNN>(
                model, x,
                [](const TwoBranchDNN& m2, std::span<const double> row) {
                    return dnn_predict(m2, row);
                });
        });
    m.def(
        "dnn_build",
        [](const std::string& fusion, std::size_t image_dim, std::uint64_t seed) {
            TwoBranchDNN model = dnn_build(
                fusion == "mean_sigmoid" ? Fusion::MeanThenSigmoid : Fusion::Mean, image_dim);
            dnn_init(model, seed);
            return model;
        },
        py::arg("fusion") = "mean", py::arg("image_dim") = kFeatureDim, py::arg("seed") = 0);

    // --- artifacts -----------------------------------------------------------
    m.def("load_model", [](const std::string& path) {
        return model_from_artifact(load_artifact(path));
    });
    m.def("predict_proba", [](const AnyModel& model,
                              const py::array_t<double, py::array::c_style>& x) {
        if (x.ndim() != 2) throw py::value_error("expected a 2-D array");
        const std::size_t n = static_cast<std::size_t>(x.shape(0));
        const std::size_t d = static_cast<std::size_t>(x.shape(1));
        py::array_t<double> out(n);
        for (std::size_t i = 0; i < n; ++i)
            out.mutable_data()[i] = predict_proba(model, {x.data() + i * d, d});
        return out;
    });

    // --- dicom ---------------------------------------------------------------
    py::class_<dicom::DicomObject>(m, "DicomObject")
        .def_readonly("transfer_syntax_uid", &dicom::DicomObject::transfer_syntax_uid)
        .def_readonly("rows", &dicom::DicomObject::rows)
        .def_readonly("columns", &dicom::DicomObject::columns)
        .def_readonly("bits_allocated", &dicom::DicomObject::bits_allocated)
        .def_readonly("bits_stored", &dicom::DicomObject::bits_stored)
        .def_property_readonly("photometric",
                               [](const dicom::DicomObject& obj) {
                                   return obj.photometric_interpretation ==
                                                  Photometric::Monochrome1
                                              ? "MONOCHROME1"
                                              : "MONOCHROME2";
                               })
        .def_property_readonly("payload_kind",
                               [](const dicom::DicomObject& obj) {
                                   return obj.payload_kind == dicom::PayloadKind::Native
                                              ? "native"
                                              : "encapsulated";
                               })
        .def("pixels", [](const dicom::DicomObject& obj) {
            const PixelMatrix px = dicom::decode_native_pixels(obj);
            py::array_t<std::uint16_t> arr({px.rows, px.columns});
            std::copy(px.values.begin(), px.values.end(), arr.mutable_data());
            return arr;
        });
    m.def("parse_dicom", [](const py::bytes& raw) {
        const std::string_view view = raw;
        return dicom::parse_dicom(
            {reinterpret_cast<const std::uint8_t*>(view.data()), view.size()});
    });
}
