// gantron/runconfig.hpp

// Copyright 2026  GANtron Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gantron/common.hpp"

namespace gantron {

// Flat `key = value` configuration with '#' comments. Every key is declared
// up front with a default, its owning module and a one-line description;
// unknown keys are rejected at load and at override time. Flags override
// file values, which override defaults.
class RunConfig {
 public:
  struct KeySpec {
    std::string key;
    std::string default_value;
    std::string module;
    std::string doc;
  };

  explicit RunConfig(std::vector<KeySpec> registry) {
    for (auto& spec : registry) {
      require(registry_.emplace(spec.key, spec).second,
              "RunConfig: duplicate key " + spec.key);
    }
  }

  void load_file(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), "RunConfig: cannot open " + path);
    std::string line;
    i64 line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const size_t eq = trimmed.find('=');
      require(eq != std::string::npos,
              "RunConfig: " + path + ":" + std::to_string(line_no) + ": expected key = value");
      set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
    }
  }

  void set(const std::string& key, const std::string& value) {
    require(registry_.count(key) > 0, "RunConfig: unknown key '" + key + "'");
    values_[key] = value;
  }

  const std::string& get(const std::string& key) const {
    auto spec = registry_.find(key);
    require(spec != registry_.end(), "RunConfig: unknown key '" + key + "'");
    auto it = values_.find(key);
    return it != values_.end() ? it->second : spec->second.default_value;
  }

  i64 get_i(const std::string& key) const {
    try {
      return std::stoll(get(key));
    } catch (const std::exception&) {
      throw Error("RunConfig: key '" + key + "' is not an integer: " + get(key));
    }
  }

  double get_d(const std::string& key) const {
    try {
      return std::stod(get(key));
    } catch (const std::exception&) {
      throw Error("RunConfig: key '" + key + "' is not a number: " + get(key));
    }
  }

  bool get_b(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error("RunConfig: key '" + key + "' is not a boolean: " + v);
  }

  // Effective configuration, every key with its value, sorted.
  std::string render() const {
    std::string out;
    for (const auto& [key, spec] : registry_)
      out += key + " = " + get(key) + "\n";
    return out;
  }

  std::string describe() const {
    std::string out;
    for (const auto& [key, spec] : registry_)
      out += key + " (default: " + spec.default_value + ", module: " + spec.module + ") — " +
             spec.doc + "\n";
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  std::map<std::string, KeySpec> registry_;
  std::map<std::string, std::string> values_;
};

}  // namespace gantron
