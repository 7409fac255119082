#include "superlab/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace superlab {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown field '" + it.key() + "'");
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

Eigen::VectorXd vector_field(const json& v, int K, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array");
  if (static_cast<int>(v.size()) != K)
    throw ConfigError(where + ": expected " + std::to_string(K) + " entries, got " +
                      std::to_string(v.size()));
  Eigen::VectorXd out(K);
  for (int i = 0; i < K; ++i) out(i) = number(v[static_cast<std::size_t>(i)], where);
  return out;
}

}  // namespace

Mechanism parse_mechanism(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("model: top level must be an object");
  reject_unknown(doc, {"types", "a", "b", "eta", "jumps"}, "model");
  for (const char* key : {"types", "a", "b", "eta"})
    if (!doc.contains(key)) throw ConfigError(std::string("model: missing field '") + key + "'");

  if (!doc["types"].is_number_integer() || doc["types"].get<long long>() < 1)
    throw ConfigError("model.types: expected a positive integer");
  const int K = doc["types"].get<int>();

  Mechanism m = Mechanism::zeros(K);
  m.a = vector_field(doc["a"], K, "model.a");
  m.b = vector_field(doc["b"], K, "model.b");
  const json& eta = doc["eta"];
  if (!eta.is_array() || static_cast<int>(eta.size()) != K)
    throw ConfigError("model.eta: expected a " + std::to_string(K) + "x" + std::to_string(K) + " array");
  for (int i = 0; i < K; ++i)
    m.eta.row(i) = vector_field(eta[static_cast<std::size_t>(i)], K, "model.eta[" + std::to_string(i) + "]")
                       .transpose();

  if (doc.contains("jumps")) {
    const json& jumps = doc["jumps"];
    if (!jumps.is_array()) throw ConfigError("model.jumps: expected an array");
    for (std::size_t n = 0; n < jumps.size(); ++n) {
      const std::string where = "model.jumps[" + std::to_string(n) + "]";
      const json& j = jumps[n];
      if (!j.is_object()) throw ConfigError(where + ": expected an object");
      reject_unknown(j, {"type", "rate", "vector"}, where);
      for (const char* key : {"type", "rate", "vector"})
        if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
      if (!j["type"].is_number_integer()) throw ConfigError(where + ".type: expected an integer");
      const int type = j["type"].get<int>();
      if (type < 1 || type > K) throw ConfigError(where + ".type: out of range 1.." + std::to_string(K));
      JumpAtom atom;
      atom.rate = number(j["rate"], where + ".rate");
      atom.size = vector_field(j["vector"], K, where + ".vector");
      m.jumps[static_cast<std::size_t>(type - 1)].push_back(std::move(atom));
    }
  }
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Mechanism load_mechanism(const std::string& path) { return parse_mechanism(read_file(path)); }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace superlab
