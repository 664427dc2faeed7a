#include "din/checkpoint.hpp"

#include <fstream>

#include "din/errors.hpp"

namespace din::checkpoint {

using nlohmann::json;

json to_json(const Checkpoint& c) {
  const model::ModelConfig& mc = c.params.config;
  json params = json::array();
  for (const auto& [name, t] : c.params.named())
    params.push_back({{"name", name}, {"shape", t->shape()}, {"data", t->storage()}});
  json stats = json::array();
  for (std::size_t d = 0; d < c.standardization.size(); ++d)
    stats.push_back({{"variable", cohort::variable_name(d)},
                     {"mean", c.standardization[d].mean},
                     {"std", c.standardization[d].std}});
  return {{"format", "din-checkpoint"},
          {"version", kFormatVersion},
          {"config_hash", c.config_hash},
          {"model",
           {{"num_variables", mc.num_variables},
            {"grid", {{"start", mc.grid.start}, {"end", mc.grid.end}, {"points", mc.grid.points}}},
            {"kappa", mc.kappa},
            {"hidden", mc.hidden}}},
          {"split_fractions",
           {{"train", c.fractions.train}, {"validation", c.fractions.validation}, {"test", c.fractions.test}}},
          {"standardization", stats},
          {"params", params}};
}

Checkpoint from_json(const json& j) {
  try {
    if (j.at("format") != "din-checkpoint") throw DataError("checkpoint: unknown format tag");
    if (j.at("version") != kFormatVersion)
      throw DataError("checkpoint: unsupported version " + j.at("version").dump());
    const json& m = j.at("model");
    model::ModelConfig mc;
    mc.num_variables = m.at("num_variables");
    mc.grid = {m.at("grid").at("start"), m.at("grid").at("end"), m.at("grid").at("points")};
    mc.kappa = m.at("kappa");
    mc.hidden = m.at("hidden");
    mc.validate();

    Checkpoint c;
    c.params = model::ModelParams::init(mc, 0);
    c.config_hash = j.at("config_hash");
    const json& f = j.at("split_fractions");
    c.fractions = {f.at("train"), f.at("validation"), f.at("test")};
    for (const json& s : j.at("standardization")) c.standardization.push_back({s.at("mean"), s.at("std")});

    const json& stored = j.at("params");
    auto slots = c.params.named();
    if (stored.size() != slots.size())
      throw DataError("checkpoint: expected " + std::to_string(slots.size()) + " parameter tensors, found " +
                      std::to_string(stored.size()));
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const json& p = stored[k];
      const std::string name = p.at("name");
      if (name != slots[k].first) throw DataError("checkpoint: expected parameter '" + slots[k].first + "', found '" + name + "'");
      const ad::Shape shape = p.at("shape").get<ad::Shape>();
      if (shape != slots[k].second->shape())
        throw DataError("checkpoint: parameter '" + name + "' has shape " + ad::to_string(shape) + ", model needs " +
                        ad::to_string(slots[k].second->shape()));
      std::vector<double> data = p.at("data").get<std::vector<double>>();
      *slots[k].second = ad::Tensor(shape, std::move(data));
    }
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: malformed JSON: ") + e.what());
  } catch (const ShapeError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

void save(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  out << to_json(c).dump(1) << '\n';
  if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("checkpoint '" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

}  // namespace din::checkpoint
