#ifndef SCATLAB_CONTAINER_HPP
#define SCATLAB_CONTAINER_HPP

#include <string>
#include <vector>

namespace scatlab {

/// Self-describing binary file:
///
///   <magic>\n
///   u64 LE  header length in bytes
///   header  UTF-8 JSON text
///   u64 LE  payload count
///   f64 LE  payload values
struct Container {
  std::string magic;
  std::string header;
  std::vector<double> payload;
};

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path, const std::string& expected_magic);

}  // namespace scatlab

#endif  // SCATLAB_CONTAINER_HPP
