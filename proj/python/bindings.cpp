// Python bindings. Structured results cross the boundary as JSON text and
// are decoded by the lessonrag package.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lessonrag/error.hpp"
#include "lessonrag/generation.hpp"
#include "lessonrag/lesson_plan.hpp"
#include "lessonrag/lpap.hpp"
#include "lessonrag/mock_llm.hpp"
#include "lessonrag/service.hpp"
#include "lessonrag/vector_store.hpp"

namespace py = pybind11;
using namespace lessonrag;

namespace {

std::string chunks_json(const std::string& corpus_text, const std::string& subject, std::size_t chunk_size,
                        std::size_t overlap) {
  const auto doc = parse_textbook(corpus_text, subject, Level::S1, Edition::student);
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : chunk_document(doc, ChunkingOptions{chunk_size, overlap})) arr.push_back(to_json(c));
  return arr.dump();
}

std::vector<std::vector<float>> embed(const std::vector<std::string>& texts, std::size_t dim) {
  DeterministicEmbedder e(dim);
  std::vector<std::vector<float>> out;
  for (const auto& v : e.embed_texts(texts)) out.emplace_back(v.values().begin(), v.values().end());
  return out;
}

std::string ingest(const std::string& corpus_text, const std::string& subject, const std::filesystem::path& out,
                   std::size_t chunk_size, std::size_t overlap, std::size_t dim) {
  const auto doc = parse_textbook(corpus_text, subject, Level::S1, Edition::student);
  auto chunks = chunk_document(doc, ChunkingOptions{chunk_size, overlap});
  std::vector<std::string> texts;
  for (const auto& c : chunks) texts.push_back(c.text);
  DeterministicEmbedder e(dim);
  const auto vectors = e.embed_texts(texts);
  IngestMeta meta{Level::S1, Edition::student, chunk_size, overlap, e.id(), {}};
  return persist_store(build_store(subject, std::move(chunks), vectors, meta), out);
}

std::vector<py::tuple> search(const VectorStore& store, const std::vector<float>& query, std::size_t k,
                              double min_sim) {
  std::vector<py::tuple> out;
  for (const auto& sc : store.top_k(EmbeddingVector(query), k, min_sim)) {
    out.push_back(py::make_tuple(sc.chunk.chunk_id, sc.score, sc.chunk.page_start, sc.chunk.page_end, sc.chunk.text));
  }
  return out;
}

std::string validation_json(const std::string& markup) {
  const auto r = validate_format(parse_lesson_plan(markup));
  nlohmann::ordered_json j;
  j["valid"] = r.valid;
  j["missing_sections"] = r.missing_sections;
  j["missing_keys"] = r.missing_keys;
  j["structural_errors"] = r.structural_errors;
  return j.dump();
}

/// Mock-backed service handle over a directory of stores.
class MockService {
 public:
  MockService(const std::filesystem::path& stores, std::size_t dim, double min_sim)
      : service_(Providers{std::make_shared<DeterministicEmbedder>(dim), std::make_shared<TemplateMockLlm>()},
                 config(min_sim)) {
    service_.set_stores(StoreRegistry::load_directory(stores));
  }

  py::tuple generate(const std::string& body) const {
    HttpResponse r;
    {
      py::gil_scoped_release release;
      r = service_.handle_generate(body);
    }
    return py::make_tuple(r.status, r.body);
  }
  std::string subjects() const { return service_.handle_list_subjects().body; }

 private:
  static GenerationConfig config(double min_sim) {
    GenerationConfig c;
    c.min_sim = min_sim;
    return c;
  }
  LessonService service_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of lessonrag";

  py::register_exception<Error>(m, "LessonRagError", PyExc_ValueError);

  m.def("chunk_text", &chunks_json, py::arg("corpus_text"), py::arg("subject"), py::arg("chunk_size") = 1200,
        py::arg("overlap") = 200);
  m.def("embed", &embed, py::arg("texts"), py::arg("dim") = 256);
  m.def("ingest", &ingest, py::arg("corpus_text"), py::arg("subject"), py::arg("out_dir"),
        py::arg("chunk_size") = 1200, py::arg("overlap") = 200, py::arg("dim") = 256);

  py::class_<VectorStore>(m, "VectorStore")
      .def_static("load", &load_store, py::arg("path"))
      .def_property_readonly("subject", &VectorStore::subject)
      .def_property_readonly("dim", &VectorStore::dim)
      .def("__len__", &VectorStore::size)
      .def("top_k", &search, py::arg("query"), py::arg("k"), py::arg("min_sim") = -1.0);

  m.def("parse_plan", [](const std::string& markup) { return plan_to_json(parse_lesson_plan(markup)).dump(); });
  m.def("validate_plan", &validation_json);

  m.def("score_percentage", [](double total) { return score_percentage(total, default_rubric()); });
  m.def("classify_band", [](double pct) { return std::string(to_string(classify_band(pct))); });
  m.def("default_rubric", [] { return rubric_to_json(default_rubric()); });
  m.def("percent_agreement", [](const std::vector<int>& a, const std::vector<int>& b) {
    return percent_agreement(a, b);
  });
  m.def("cohen_kappa", [](const std::vector<int>& a, const std::vector<int>& b) { return cohen_kappa(a, b); });
  m.def("spearman", [](const std::vector<double>& a, const std::vector<double>& b) {
    return spearman_correlation(a, b);
  });
  m.def("wilcoxon", [](const std::vector<double>& x, const std::vector<double>& y) {
    const auto r = wilcoxon_signed_rank(x, y);
    py::dict d;
    d["w"] = r.w;
    d["p_value"] = r.p_value;
    d["n_effective"] = r.n_effective;
    d["exact"] = r.exact;
    return d;
  });

  py::class_<MockService>(m, "MockService")
      .def(py::init<const std::filesystem::path&, std::size_t, double>(), py::arg("stores"), py::arg("dim") = 256,
           py::arg("min_sim") = 0.0)
      .def("generate", &MockService::generate, py::arg("body"))
      .def("subjects", &MockService::subjects);
}
