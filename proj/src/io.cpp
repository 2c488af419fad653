#include "io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace acid {

namespace {

double need_number(const nlohmann::json& p, const char* key) {
  require(p.contains(key) && p[key].is_number(), ErrorCode::ParseError,
          std::string("missing numeric parameter '") + key + "'");
  return p[key].get<double>();
}

double opt_number(const nlohmann::json& p, const char* key, double fallback) {
  return p.contains(key) ? p[key].get<double>() : fallback;
}

RandomTelegraphParams telegraph_params(const nlohmann::json& p) {
  RandomTelegraphParams tp;
  tp.k1 = need_number(p, "k1");
  tp.k2 = need_number(p, "k2");
  tp.c = opt_number(p, "c", 1.0);
  tp.lambda0 = opt_number(p, "lambda0", 0.0);
  return tp;
}

CtmcInput ctmc_params(const nlohmann::json& p) {
  CtmcInput in;
  require(p.contains("generator") && p["generator"].is_array(), ErrorCode::ParseError,
          "ctmc model needs a generator matrix");
  require(p.contains("lambda_map") && p["lambda_map"].is_array(), ErrorCode::ParseError,
          "ctmc model needs a lambda_map array");
  in.generator = p["generator"].get<std::vector<std::vector<double>>>();
  in.rates = p["lambda_map"].get<std::vector<double>>();
  if (p.contains("states"))
    in.states = p["states"].get<std::vector<std::string>>();
  else
    for (size_t i = 0; i < in.rates.size(); ++i) in.states.push_back(std::to_string(i));
  return in;
}

}  // namespace

LoadedModel load_model_json(const nlohmann::json& doc) {
  require(doc.contains("type") && doc["type"].is_string(), ErrorCode::ParseError,
          "model description needs a 'type'");
  LoadedModel out;
  out.type = doc["type"].get<std::string>();
  out.params = doc.contains("params") ? doc["params"] : nlohmann::json::object();
  const auto& p = out.params;

  if (out.type == "random_telegraph" || out.type == "dark_current") {
    RandomTelegraphParams tp = telegraph_params(p);
    if (out.type == "dark_current")
      require(tp.lambda0 > 0, ErrorCode::ParseError, "dark_current requires lambda0 > 0");
    out.model = random_telegraph_model(tp);
    out.input = telegraph_input(tp);
    out.law = input_law(*out.input);
  } else if (out.type == "donsoff") {
    DonsoffParams dp;
    dp.alpha01 = need_number(p, "alpha01");
    dp.alpha11 = need_number(p, "alpha11");
    dp.alpha10 = need_number(p, "alpha10");
    dp.c = opt_number(p, "c", 1.0);
    out.model = donsoff_model(dp);
    out.input = donsoff_input(dp);
    out.law = input_law(*out.input);
  } else if (out.type == "hawkes") {
    HawkesParams hp;
    if (p.contains("mu") || p.contains("sigma2")) {
      hp = hawkes_from_moments(need_number(p, "mu"), need_number(p, "sigma2"),
                               need_number(p, "gamma"), opt_number(p, "c", 1.0));
    } else {
      hp.mu0 = need_number(p, "mu0");
      hp.beta = need_number(p, "beta");
      hp.alpha = need_number(p, "alpha");
    }
    out.model = hawkes_model(hp);
  } else if (out.type == "gamma_filter") {
    GammaFilterParams gp;
    gp.mu = need_number(p, "mu");
    gp.sigma2 = need_number(p, "sigma2");
    gp.gamma = need_number(p, "gamma");
    gp.c = opt_number(p, "c", 1.0);
    if (p.contains("variant")) {
      const std::string v = p["variant"].get<std::string>();
      if (v == "birth_death" || v == "birth-death" || v == "bd")
        gp.variant = GammaFilterParams::Variant::BirthDeath;
      else
        require(v == "cir" || v == "CIR", ErrorCode::ParseError,
                "gamma_filter variant must be 'cir' or 'birth_death'");
    }
    out.model = gamma_filter_model(gp);
  } else if (out.type == "ctmc") {
    CtmcInput in = ctmc_params(p);
    out.model = snyder_model(in);
    out.input = in;
    out.law = input_law(in);
  } else if (out.type == "renewal") {
    require(p.contains("tau") && p.contains("survival"), ErrorCode::ParseError,
            "renewal model needs 'tau' and 'survival' arrays");
    out.model = renewal_model_tabulated(p["tau"].get<std::vector<double>>(),
                                        p["survival"].get<std::vector<double>>());
  } else {
    fail(ErrorCode::ParseError, "unknown model type '" + out.type + "'");
  }
  return out;
}

LoadedModel load_model_text(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  require(!doc.is_discarded(), ErrorCode::ParseError, "model description is not valid JSON");
  return load_model_json(doc);
}

LoadedModel load_model_file(const std::string& path) {
  return load_model_text(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::FileNotFound, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
    out << content;
    require(out.good(), ErrorCode::IoError, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  require(!ec, ErrorCode::IoError, "rename failed for '" + path + "'");
}

}  // namespace acid
