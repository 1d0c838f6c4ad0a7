#pragma once

// JSON documents for profiles, interference tables and cluster specs.
//
// Profiles:
//   { "<task>": { "mem_base": bytes, "mem_per_sample": bytes, "max_batch": n,
//                 "delta": d,                       // default for entries below
//                 "gpus": { "<count>": { "alpha_comp": s, "beta_comp": s,
//                                        "alpha_comm": s, "beta_comm": s,
//                                        "message_size": bytes, "delta": d } } } }
// Interference:
//   { "default_xi": x, "pairwise": [ { "first": task, "second": task,
//                                      "xi_first": x, "xi_second": x } ] }
// Cluster:
//   { "num_servers": n, "gpus_per_server": n, "gpu_memory": bytes }

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gpushare/cluster.hpp"
#include "gpushare/errors.hpp"
#include "gpushare/perf_model.hpp"

namespace gpushare {

using nlohmann::json;

namespace detail {

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : it->template get<T>();
}

template <typename T>
T get_required(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return it->template get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace detail

inline json to_json(const ModelProfile& p) {
  json gpus = json::object();
  for (const auto& [count, g] : p.by_gpus) {
    gpus[std::to_string(count)] = {{"alpha_comp", g.comp.alpha_comp},   {"beta_comp", g.comp.beta_comp},
                                   {"alpha_comm", g.comm.alpha_comm},   {"beta_comm", g.comm.beta_comm},
                                   {"message_size", g.comm.message_size}, {"delta", g.delta}};
  }
  return {{"mem_base", p.mem_base}, {"mem_per_sample", p.mem_per_sample}, {"max_batch", p.max_batch}, {"gpus", gpus}};
}

inline ModelProfile profile_from_json(const std::string& task, const json& doc) {
  const std::string where = "profile '" + task + "'";
  if (!doc.is_object()) throw ConfigError(where + " is not an object");
  ModelProfile p;
  p.task_name = task;
  p.mem_base = detail::get_or(doc, "mem_base", 0.0);
  p.mem_per_sample = detail::get_or(doc, "mem_per_sample", 0.0);
  p.max_batch = detail::get_or(doc, "max_batch", 1);
  const double delta = detail::get_or(doc, "delta", 1.0);
  const auto gpus = detail::get_required<json>(doc, "gpus", where);
  for (const auto& [key, entry] : gpus.items()) {
    int count = 0;
    try {
      count = std::stoi(key);
    } catch (const std::exception&) {
      throw ConfigError(where + ": GPU-count key '" + key + "' is not an integer");
    }
    const std::string at = where + " gpus[" + key + "]";
    GpuCountParams g;
    g.comp.alpha_comp = detail::get_required<double>(entry, "alpha_comp", at);
    g.comp.beta_comp = detail::get_required<double>(entry, "beta_comp", at);
    g.comm.alpha_comm = detail::get_required<double>(entry, "alpha_comm", at);
    g.comm.beta_comm = detail::get_required<double>(entry, "beta_comm", at);
    g.comm.message_size = detail::get_required<double>(entry, "message_size", at);
    g.delta = detail::get_or(entry, "delta", delta);
    p.by_gpus[count] = g;
  }
  try {
    validate(p);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

inline json to_json(const ProfileSet& profiles) {
  json doc = json::object();
  for (const auto& [task, p] : profiles) doc[task] = to_json(p);
  return doc;
}

inline ProfileSet profiles_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("profile document must be an object keyed by task name");
  ProfileSet out;
  for (const auto& [task, entry] : doc.items()) out.emplace(task, profile_from_json(task, entry));
  return out;
}

inline ProfileSet load_profiles(const std::string& path) { return profiles_from_json(detail::read_json_file(path)); }

inline json to_json(const InterferenceTable& t) {
  json pairs = json::array();
  for (const auto& [key, xi] : t.pairwise()) {
    pairs.push_back({{"first", key.first}, {"second", key.second}, {"xi_first", xi.first}, {"xi_second", xi.second}});
  }
  return {{"default_xi", t.default_xi()}, {"pairwise", pairs}};
}

inline InterferenceTable interference_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("interference document must be an object");
  try {
    InterferenceTable t(detail::get_or(doc, "default_xi", 1.0));
    if (auto it = doc.find("pairwise"); it != doc.end()) {
      for (const auto& e : *it) {
        t.set_pair(detail::get_required<std::string>(e, "first", "interference pair"),
                   detail::get_required<std::string>(e, "second", "interference pair"),
                   detail::get_required<double>(e, "xi_first", "interference pair"),
                   detail::get_required<double>(e, "xi_second", "interference pair"));
      }
    }
    return t;
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("interference: ") + e.what());
  }
}

inline InterferenceTable load_interference(const std::string& path) {
  return interference_from_json(detail::read_json_file(path));
}

inline json to_json(const ClusterSpec& c) {
  return {{"num_servers", c.num_servers}, {"gpus_per_server", c.gpus_per_server}, {"gpu_memory", c.gpu_memory}};
}

inline ClusterSpec cluster_from_json(const json& doc) {
  ClusterSpec c;
  c.num_servers = detail::get_required<int>(doc, "num_servers", "cluster");
  c.gpus_per_server = detail::get_required<int>(doc, "gpus_per_server", "cluster");
  c.gpu_memory = detail::get_or(doc, "gpu_memory", c.gpu_memory);
  try {
    validate(c);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

}  // namespace gpushare
