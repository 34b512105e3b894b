#include "dkspde/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dkspde/errors.hpp"

namespace dkspde {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[std::size_t(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string field_to_csv(const GridState& field) {
  std::ostringstream os;
  const GridSpec& g = field.spec;
  os << (g.d == 1 ? "i,value\n" : "i,j,value\n");
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    os << g.coord(idx, 0) << ',';
    if (g.d == 2) os << g.coord(idx, 1) << ',';
    os << format_double(field.values[idx]) << '\n';
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os.write(text.data(), std::streamsize(text.size()));
  if (!os) throw ConfigError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

namespace {

std::filesystem::path header_path(const std::filesystem::path& p) { return p.string() + ".hdr"; }

}  // namespace

void write_snapshot(const std::filesystem::path& path, const GridState& field) {
  std::string block(field.values.size() * 8, '\0');
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(field.values[i]);
    for (int b = 0; b < 8; ++b) block[i * 8 + std::size_t(b)] = char((bits >> (8 * b)) & 0xff);
  }
  write_text(path, block);
  std::ostringstream hdr;
  hdr << "d = " << field.spec.d << "\nn = " << field.spec.n << "\ntime = " << format_double(field.time)
      << "\nformat = float64-le row-major\n";
  write_text(header_path(path), hdr.str());
}

GridState read_snapshot(const std::filesystem::path& path) {
  std::istringstream hdr(read_text(header_path(path)));
  int d = 0, n = 0;
  double t = 0.0;
  std::string line;
  while (std::getline(hdr, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    key.erase(key.find_last_not_of(' ') + 1);
    if (key == "d") d = std::stoi(val);
    else if (key == "n") n = std::stoi(val);
    else if (key == "time") t = std::stod(val);
  }
  const GridSpec spec = GridSpec::make(d, n);
  const std::string block = read_text(path);
  if (block.size() != spec.size() * 8) throw ConfigError("snapshot " + path.string() + ": size does not match header");
  std::vector<double> v(spec.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(static_cast<unsigned char>(block[i * 8 + std::size_t(b)])) << (8 * b);
    v[i] = std::bit_cast<double>(bits);
  }
  return GridState(spec, std::move(v), t);
}

}  // namespace dkspde
