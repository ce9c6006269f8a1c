#include "scatlab/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "scatlab/common.hpp"

namespace scatlab {

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is, const std::string& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ParseError("truncated container: " + path);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_container(const std::string& path, const Container& c) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << c.magic << '\n';
  put_u64(os, c.header.size());
  os.write(c.header.data(), std::streamsize(c.header.size()));
  put_u64(os, c.payload.size());
  for (double v : c.payload) put_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw IoError("write failed for '" + path + "'");
}

Container read_container(const std::string& path, const std::string& expected_magic) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  Container c;
  std::getline(is, c.magic);
  if (c.magic != expected_magic)
    throw ParseError("'" + path + "' is not a " + expected_magic + " file (header '" + c.magic.substr(0, 32) + "')");
  const std::uint64_t hlen = get_u64(is, path);
  if (hlen > (std::uint64_t(1) << 32)) throw ParseError("implausible header length in " + path);
  c.header.resize(hlen);
  if (!is.read(c.header.data(), std::streamsize(hlen))) throw ParseError("truncated container header: " + path);
  const std::uint64_t count = get_u64(is, path);
  if (count > (std::uint64_t(1) << 34)) throw ParseError("implausible payload length in " + path);
  c.payload.resize(count);
  for (auto& v : c.payload) v = std::bit_cast<double>(get_u64(is, path));
  return c;
}

}  // namespace scatlab
