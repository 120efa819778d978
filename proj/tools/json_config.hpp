#pragma once

// JSON config files for CLI11. Nested objects name subcommands:
//   {"generate": {"seed": 42, "scr-db": 10}, "train": {"pf": 0.01}}
// Scalar keys at the top level apply to whichever subcommand was invoked.

#include <algorithm>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace seadet::cli {

class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return dump(app, default_also).dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError("config", std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config", "config file must hold a JSON object");
    std::vector<std::string> active;
    for (const auto* sub : root_->get_subcommands()) active.push_back(sub->get_name());
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        // Sections for other subcommands are ignored so one file can drive a whole pipeline.
        if (std::find(active.begin(), active.end(), key) == active.end()) continue;
        for (const auto& [k2, v2] : value.items()) items.push_back(item({key}, k2, v2));
      } else {
        items.push_back(item(active, key, value));
      }
    }
    return items;
  }

 private:
  static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name, const nlohmann::json& v) {
    CLI::ConfigItem it;
    it.parents = std::move(parents);
    it.name = name;
    auto scalar = [](const nlohmann::json& x) -> std::string {
      if (x.is_string()) return x.get<std::string>();
      if (x.is_boolean()) return x.get<bool>() ? "true" : "false";
      if (x.is_null()) return "";
      return x.dump();
    };
    if (v.is_array()) {
      for (const auto& e : v) it.inputs.push_back(scalar(e));
    } else {
      it.inputs.push_back(scalar(v));
    }
    return it;
  }

  static nlohmann::json dump(const CLI::App* app, bool default_also) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto* opt : app->get_options()) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      std::vector<std::string> vals = opt->results();
      if (vals.empty()) {
        if (!default_also || opt->get_default_str().empty()) continue;
        vals = {opt->get_default_str()};
      }
      auto to_json = [](const std::string& s) -> nlohmann::json {
        try {
          return nlohmann::json::parse(s);
        } catch (...) {
          return s;
        }
      };
      if (opt->get_expected_max() > 1) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : vals) arr.push_back(to_json(v));
        j[name] = arr;
      } else {
        j[name] = to_json(vals.back());
      }
    }
    for (const auto* sub : app->get_subcommands({})) {
      if (sub->count() > 0 || default_also) j[sub->get_name()] = dump(sub, default_also);
    }
    return j;
  }

  const CLI::App* root_;
};

}  // namespace seadet::cli
