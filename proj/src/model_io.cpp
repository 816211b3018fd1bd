#include "lod/model_io.hpp"

#include <fstream>

#include "lod/error.hpp"

namespace lod {

using nlohmann::json;

namespace {

constexpr const char* kLayout = "row-major, last variable fastest";

json cpt_to_json(const Cpt& cpt) {
  return json{{"child_cards", cpt.child_space().cards()},
              {"parent_cards", cpt.parent_space().cards()},
              {"data", std::vector<double>(cpt.table().begin(), cpt.table().end())}};
}

Cpt cpt_from_json(const json& doc) {
  return Cpt(StateSpace(doc.at("child_cards").get<std::vector<std::size_t>>()),
             StateSpace(doc.at("parent_cards").get<std::vector<std::size_t>>()),
             doc.at("data").get<std::vector<double>>());
}

}  // namespace

json pmf_to_json(const Pmf& pmf) {
  return json{{"cards", pmf.space().cards()},
              {"probs", std::vector<double>(pmf.probs().begin(), pmf.probs().end())}};
}

Pmf pmf_from_json(const json& doc) {
  return Pmf(StateSpace(doc.at("cards").get<std::vector<std::size_t>>()), doc.at("probs").get<std::vector<double>>());
}

json model_to_json(const GenerativeModel& model) {
  json doc;
  doc["format"] = "lod-model";
  doc["version"] = kModelFormatVersion;
  doc["layout"] = kLayout;
  doc["kind"] = std::string(to_string(model.kind()));
  doc["obs_cards"] = model.shape().obs.cards();
  doc["lat_cards"] = model.shape().lat.cards();
  json theta = json::array();
  for (const Cpt& t : model.thetas()) theta.push_back(cpt_to_json(t));
  doc["theta"] = std::move(theta);
  if (const auto* joint_prior = std::get_if<Pmf>(&model.prior())) {
    doc["prior"] = pmf_to_json(*joint_prior);
  } else {
    json factors = json::array();
    for (const Pmf& f : std::get<std::vector<Pmf>>(model.prior())) factors.push_back(pmf_to_json(f));
    doc["prior_factors"] = std::move(factors);
  }
  if (!model.recognition().empty()) {
    json rec = json::array();
    for (const Cpt& r : model.recognition()) rec.push_back(cpt_to_json(r));
    doc["recognition"] = std::move(rec);
  }
  return doc;
}

GenerativeModel model_from_json(const json& doc) {
  if (doc.value("format", "") != "lod-model") throw DomainError("not a lod-model document");
  const int version = doc.value("version", 0);
  if (version != kModelFormatVersion) throw DomainError("unsupported model format version " + std::to_string(version));
  if (doc.value("layout", "") != kLayout) throw DomainError("unsupported table layout");

  ModelShape shape{StateSpace(doc.at("obs_cards").get<std::vector<std::size_t>>()),
                   StateSpace(doc.at("lat_cards").get<std::vector<std::size_t>>())};
  const ModelKind kind = parse_model_kind(doc.at("kind").get<std::string>());
  std::vector<Cpt> theta;
  for (const json& t : doc.at("theta")) theta.push_back(cpt_from_json(t));
  LatentPrior prior = has_factorized_prior(kind) ? LatentPrior{std::vector<Pmf>{}} : LatentPrior{Pmf{}};
  if (has_factorized_prior(kind)) {
    std::vector<Pmf> factors;
    for (const json& f : doc.at("prior_factors")) factors.push_back(pmf_from_json(f));
    prior = std::move(factors);
  } else {
    prior = pmf_from_json(doc.at("prior"));
  }
  std::vector<Cpt> rec;
  if (doc.contains("recognition"))
    for (const json& r : doc.at("recognition")) rec.push_back(cpt_from_json(r));
  return GenerativeModel(kind, std::move(shape), std::move(theta), std::move(prior), std::move(rec));
}

void save_model(const GenerativeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  // max_digits10 keeps the round trip exact.
  out << model_to_json(model).dump() << '\n';
}

GenerativeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return model_from_json(json::parse(in));
}

}  // namespace lod
