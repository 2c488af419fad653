#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "zoo.hpp"

namespace acid {

/// A model parsed from its JSON description, together with the input law
/// when the model is a Markov-modulated instance.
struct LoadedModel {
  PdmpModel model;
  std::string type;
  nlohmann::json params;
  std::optional<CtmcInput> input;
  std::optional<InputLaw> law;
};

LoadedModel load_model_json(const nlohmann::json& doc);
LoadedModel load_model_text(const std::string& text);
LoadedModel load_model_file(const std::string& path);

/// Shortest representation that round-trips the double exactly.
std::string format_double(double v);

/// Writes via a temporary file and rename so readers never see partial data.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text_file(const std::string& path);

}  // namespace acid
