#include "schema_check.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace testkit {

namespace {

using nlohmann::json;

bool has_type(const json& v, const std::string& type) {
  if (type == "null") return v.is_null();
  if (type == "boolean") return v.is_boolean();
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
  if (type == "number") return v.is_number();
  throw std::invalid_argument("unsupported schema type " + type);
}

class Checker {
 public:
  explicit Checker(const json& root) : root_(root) {}

  void check(const json& v, const json& schema, const std::string& where) {
    if (schema.contains("$ref")) {
      const std::string ref = schema["$ref"];
      const std::string prefix = "#/$defs/";
      if (ref.rfind(prefix, 0) != 0) throw std::invalid_argument("unsupported $ref " + ref);
      check(v, root_.at("$defs").at(ref.substr(prefix.size())), where);
      return;
    }
    if (schema.contains("type")) {
      const json& t = schema["type"];
      bool ok = false;
      if (t.is_string()) {
        ok = has_type(v, t);
      } else {
        for (const auto& one : t) ok = ok || has_type(v, one);
      }
      if (!ok) {
        fail(where, "expected type " + t.dump() + ", got " + v.dump().substr(0, 60));
        return;
      }
    }
    if (schema.contains("const") && v != schema["const"]) fail(where, "expected " + schema["const"].dump());
    if (schema.contains("enum")) {
      bool found = false;
      for (const auto& e : schema["enum"]) found = found || e == v;
      if (!found) fail(where, "value not in enum");
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (schema.contains("minimum") && x < schema["minimum"].get<double>()) fail(where, "below minimum");
      if (schema.contains("maximum") && x > schema["maximum"].get<double>()) fail(where, "above maximum");
      if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>()) {
        fail(where, "not above exclusiveMinimum");
      }
    }
    if (v.is_object()) {
      if (schema.contains("required")) {
        for (const auto& key : schema["required"]) {
          if (!v.contains(key.get<std::string>())) fail(where, "missing key " + key.get<std::string>());
        }
      }
      const json props = schema.value("properties", json::object());
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (props.contains(it.key())) {
          check(it.value(), props[it.key()], where + "." + it.key());
        } else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false) {
          fail(where, "unexpected key " + it.key());
        }
      }
    }
    if (v.is_array()) {
      if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>()) {
        fail(where, "too few items");
      }
      if (schema.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          check(v[i], schema["items"], where + "[" + std::to_string(i) + "]");
        }
      }
    }
  }

  std::vector<std::string> errors;

 private:
  void fail(const std::string& where, const std::string& what) { errors.push_back(where + ": " + what); }

  const json& root_;
};

}  // namespace

std::vector<std::string> schema_violations(const nlohmann::json& doc, const nlohmann::json& schema) {
  Checker c(schema);
  c.check(doc, schema, "$");
  return c.errors;
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace testkit
