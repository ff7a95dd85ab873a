#include "docingest/json_io.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace docingest {

std::string format_number(double value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("cannot serialize non-finite number");
  }
  if (value == 0.0) return "0";  // also folds -0
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc{}) throw std::runtime_error("to_chars failed");
  return std::string(buf, res.ptr);
}

namespace {

void write_string(std::string& out, const std::string& s) {
  // nlohmann's own escaping is already canonical for strings.
  out += OrderedJson(s).dump();
}

void write(std::string& out, const OrderedJson& v) {
  switch (v.type()) {
    case OrderedJson::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        write_string(out, it.key());
        out += ':';
        write(out, it.value());
      }
      out += '}';
      break;
    }
    case OrderedJson::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ',';
        first = false;
        write(out, item);
      }
      out += ']';
      break;
    }
    case OrderedJson::value_t::number_float:
      out += format_number(v.get<double>());
      break;
    case OrderedJson::value_t::string:
      write_string(out, v.get_ref<const std::string&>());
      break;
    default:
      out += v.dump();
      break;
  }
}

}  // namespace

std::string dump_json(const OrderedJson& value) {
  std::string out;
  write(out, value);
  return out;
}

}  // namespace docingest
