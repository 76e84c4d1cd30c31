#include "hamlearn/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hamlearn::nn {

using nlohmann::json;

std::string model_to_string(const HnnModel& model) {
  json doc;
  doc["format"] = "hamlearn-model";
  doc["version"] = kModelFormatVersion;
  doc["activation"] = "tanh";
  doc["layer_dims"] = model.layer_dims();
  doc["param_channels"] = model.param_channels();
  doc["training_params"] = model.training_params;
  json layers = json::array();
  for (const DenseLayer& layer : model.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    }
    layers.push_back({{"weight", w},
                      {"bias", std::vector<double>(layer.bias.data(),
                                                   layer.bias.data() + layer.bias.size())}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump();
}

HnnModel model_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (doc.value("format", "") != "hamlearn-model") throw IoError("not a hamlearn model file");
  if (doc.value("version", 0) != kModelFormatVersion) {
    throw IoError("unsupported model format version");
  }
  if (doc.value("activation", "") != "tanh") throw IoError("unsupported activation");
  try {
    HnnModel model(doc.at("layer_dims").get<std::vector<int>>(),
                   doc.at("param_channels").get<std::size_t>());
    model.training_params = doc.at("training_params").get<std::vector<std::vector<double>>>();
    const json& layers = doc.at("layers");
    if (layers.size() != model.layers().size()) throw IoError("model file: layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      DenseLayer& layer = model.layers()[l];
      const auto w = layers[l].at("weight").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(layer.weight.size()) ||
          b.size() != static_cast<std::size_t>(layer.bias.size())) {
        throw IoError("model file: layer " + std::to_string(l) + " has the wrong shape");
      }
      std::size_t i = 0;
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = w[i++];
      }
      for (std::size_t j = 0; j < b.size(); ++j) layer.bias(static_cast<Eigen::Index>(j)) = b[j];
    }
    model.check_finite();
    return model;
  } catch (const json::exception& e) {
    throw IoError(std::string("model file is malformed: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const HnnModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << model_to_string(model) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

HnnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_string(buf.str());
}

}  // namespace hamlearn::nn
