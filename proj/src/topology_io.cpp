#include <fstream>
#include <sstream>

#include "fabric/error.hpp"
#include "fabric/topology.hpp"

namespace fabric {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const json& obj, const char* key,
                         const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_string()) fail(where, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

std::int64_t int_field(const json& obj, const char* key,
                       const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number_integer())
    fail(where, std::string("'") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

const json& array_field(const json& doc, const char* key) {
  static const json empty = json::array();
  auto it = doc.find(key);
  if (it == doc.end()) return empty;
  if (!it->is_array()) fail(key, "expected an array");
  return *it;
}

PortRef port_ref(const json& obj, const std::string& where) {
  return {string_field(obj, "vfc", where), string_field(obj, "port", where)};
}

// Replays one constructor call, turning its failure into a positioned
// ParseError.
template <typename F>
void replay(const std::string& where, F&& step) {
  try {
    step();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    fail(where, e.what());
  }
}

}  // namespace

Fabric load_topology(const nlohmann::json& doc) {
  Fabric fabric;
  if (doc.is_null()) return fabric;
  if (!doc.is_object()) fail("document", "expected a JSON object");
  if (auto it = doc.find("domain"); it != doc.end()) {
    if (!it->is_string()) fail("domain", "must be a string");
    fabric.set_domain(it->get<std::string>());
  }

  const auto& devices = array_field(doc, "devices");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    std::string where = "devices[" + std::to_string(i) + "]";
    const auto& d = devices[i];
    std::vector<PhysicalPort> ports;
    const auto& pj = field(d, "ports", where);
    if (!pj.is_array()) fail(where, "'ports' must be an array");
    for (std::size_t k = 0; k < pj.size(); ++k) {
      std::string pw = where + ".ports[" + std::to_string(k) + "]";
      ports.push_back({string_field(pj[k], "id", pw),
                       int_field(pj[k], "speed_mbps", pw)});
    }
    std::string id = string_field(d, "id", where);
    replay(where, [&] { fabric.add_device(id, std::move(ports)); });
  }

  const auto& vfcs = array_field(doc, "vfcs");
  for (std::size_t i = 0; i < vfcs.size(); ++i) {
    std::string where = "vfcs[" + std::to_string(i) + "]";
    const auto& v = vfcs[i];
    std::vector<LogicalPortSpec> ports;
    const auto& pj = field(v, "ports", where);
    if (!pj.is_array()) fail(where, "'ports' must be an array");
    for (std::size_t k = 0; k < pj.size(); ++k) {
      std::string pw = where + ".ports[" + std::to_string(k) + "]";
      const auto& b = field(pj[k], "backing", pw);
      std::string kind = string_field(b, "kind", pw + ".backing");
      std::string phys = string_field(b, "physical_port", pw + ".backing");
      PortBacking backing;
      if (kind == "physical") {
        backing = PortBacking::physical(phys);
      } else if (kind == "tunnel") {
        auto vlan = int_field(b, "tunnel_vlan", pw + ".backing");
        if (vlan < 0 || vlan > 4095) fail(pw, "tunnel_vlan out of range");
        backing = PortBacking::tunnel(phys, static_cast<Vlan>(vlan));
      } else {
        fail(pw, "unknown backing kind '" + kind + "'");
      }
      ports.push_back({string_field(pj[k], "id", pw), backing});
    }
    std::string id = string_field(v, "id", where);
    std::string device = string_field(v, "device", where);
    std::string overlay = string_field(v, "overlay", where);
    replay(where, [&] {
      fabric.carve_vfc(device, id, overlay, std::move(ports));
    });
  }

  const auto& links = array_field(doc, "links");
  for (std::size_t i = 0; i < links.size(); ++i) {
    std::string where = "links[" + std::to_string(i) + "]";
    const auto& l = links[i];
    std::string id = l.contains("id") ? string_field(l, "id", where) : "";
    PortRef a = port_ref(field(l, "a", where), where + ".a");
    PortRef b = port_ref(field(l, "b", where), where + ".b");
    Mbps capacity = int_field(l, "capacity_mbps", where);
    replay(where, [&] { fabric.add_link(id, a, b, capacity); });
  }

  const auto& endpoints = array_field(doc, "endpoints");
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    std::string where = "endpoints[" + std::to_string(i) + "]";
    const auto& e = endpoints[i];
    std::string id = string_field(e, "id", where);
    PortRef at{string_field(e, "vfc", where), string_field(e, "port", where)};
    Mbps access = int_field(e, "access_mbps", where);
    replay(where, [&] { fabric.add_endpoint(id, at, access); });
  }

  const auto& idl = array_field(doc, "interdomain_links");
  for (std::size_t i = 0; i < idl.size(); ++i) {
    std::string where = "interdomain_links[" + std::to_string(i) + "]";
    const auto& l = idl[i];
    InterDomainLink link{string_field(l, "id", where),
                         string_field(l, "endpoint", where),
                         string_field(l, "peer_domain", where),
                         string_field(l, "peer_endpoint", where)};
    replay(where, [&] { fabric.add_interdomain_link(std::move(link)); });
  }
  return fabric;
}

Fabric load_topology_text(const std::string& text) {
  json doc;
  try {
    doc = text.find_first_not_of(" \t\r\n") == std::string::npos
              ? json()
              : json::parse(text);
  } catch (const json::parse_error& e) {
    fail("byte " + std::to_string(e.byte), e.what());
  }
  return load_topology(doc);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return json();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(path + " byte " + std::to_string(e.byte), e.what());
  }
}

Fabric load_topology_file(const std::string& path) {
  return load_topology(read_json_file(path));
}

}  // namespace fabric
