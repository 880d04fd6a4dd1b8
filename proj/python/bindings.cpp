#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fabric/api.hpp"
#include "fabric/error.hpp"
#include "fabric/system.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// JSON crosses the boundary as text; the Python layer decodes it.
class PySystem {
 public:
  PySystem(const std::vector<std::string>& topologies, std::size_t replicas, int vlan_low,
           int vlan_high)
      : system_(make_config(topologies, replicas, vlan_low, vlan_high)), api_(system_) {}

  std::string execute(const std::string& op) {
    py::gil_scoped_release nogil;
    std::lock_guard lock(api_.mutex());
    return system_.execute(json::parse(op)).dump();
  }

  void replay(const std::vector<std::string>& ops) {
    std::vector<json> session;
    for (const auto& op : ops) session.push_back(json::parse(op));
    std::lock_guard lock(api_.mutex());
    system_.replay(session);
  }

  py::tuple handle(const std::string& method, const std::string& path,
                   const std::map<std::string, std::string>& query, const std::string& body) {
    fabric::ApiResponse r;
    {
      py::gil_scoped_release nogil;
      r = api_.handle(method, path, query, body);
    }
    return py::make_tuple(r.status, r.body, r.content_type);
  }

  std::string query(const std::string& what, const std::string& domain) {
    std::lock_guard lock(api_.mutex());
    if (what == "topology") return system_.topology(domain).dump();
    if (what == "services") return system_.bod_services(domain).dump();
    if (what == "circuits") return system_.circuits(domain).dump();
    if (what == "cluster") return system_.cluster_status(domain).dump();
    if (what == "rules") return system_.rules(domain).dump();
    if (what == "nsi") return system_.nsi_reservations().dump();
    if (what == "hashes") return system_.hashes().dump();
    throw fabric::Error(fabric::ErrorCode::BadRequest, "unknown query " + what);
  }

  std::string nsi_reservation(const std::string& cid) {
    std::lock_guard lock(api_.mutex());
    return system_.nsi_reservation(cid).dump();
  }

  std::vector<std::string> events(std::int64_t since) {
    std::vector<std::string> out;
    for (const auto& e : system_.events().since(since)) out.push_back(e.dump());
    return out;
  }

  std::vector<std::string> session() {
    std::lock_guard lock(api_.mutex());
    std::vector<std::string> out;
    for (const auto& op : system_.session()) out.push_back(op.dump());
    return out;
  }

  std::vector<std::string> nsi_trace() {
    std::lock_guard lock(api_.mutex());
    return system_.nsi_trace();
  }

  std::vector<std::string> domains() const {
    std::vector<std::string> out;
    for (const auto& d : system_.domains()) out.push_back(d->name);
    return out;
  }

 private:
  static fabric::SystemConfig make_config(const std::vector<std::string>& topologies,
                                          std::size_t replicas, int low, int high) {
    fabric::SystemConfig c;
    for (const auto& t : topologies) c.topologies.push_back(json::parse(t));
    c.replicas = replicas;
    if (low < 1 || high > 4094 || low > high)
      throw fabric::Error(fabric::ErrorCode::InvalidVlan, "bad vlan range");
    c.vlans = {static_cast<fabric::Vlan>(low), static_cast<fabric::Vlan>(high)};
    return c;
  }

  fabric::System system_;
  fabric::Api api_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Simulated SDN fabric: bandwidth on demand, SDX-L2 circuits, failover, clustering, NSI";

  static py::exception<fabric::Error> error(m, "FabricError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const fabric::Error& e) {
      py::tuple args = py::make_tuple(std::string(fabric::to_string(e.code())), e.detail());
      PyErr_SetObject(error.ptr(), args.ptr());
    } catch (const json::exception& e) {
      py::tuple args = py::make_tuple(std::string("BadRequest"), std::string(e.what()));
      PyErr_SetObject(error.ptr(), args.ptr());
    }
  });

  py::class_<PySystem>(m, "System")
      .def(py::init<const std::vector<std::string>&, std::size_t, int, int>(),
           py::arg("topologies"), py::arg("replicas") = 3, py::arg("vlan_low") = 2,
           py::arg("vlan_high") = 4094)
      .def("execute", &PySystem::execute, py::arg("op"))
      .def("replay", &PySystem::replay, py::arg("ops"))
      .def("handle", &PySystem::handle, py::arg("method"), py::arg("path"),
           py::arg("query") = std::map<std::string, std::string>{}, py::arg("body") = "")
      .def("query", &PySystem::query, py::arg("what"), py::arg("domain") = "")
      .def("nsi_reservation", &PySystem::nsi_reservation, py::arg("cid"))
      .def("events", &PySystem::events, py::arg("since") = 0)
      .def("session", &PySystem::session)
      .def("nsi_trace", &PySystem::nsi_trace)
      .def("domains", &PySystem::domains);

  m.attr("HOLD_TICKS") = fabric::kNsiHoldTicks;
}
