#include "curator/catalog/annotations.hpp"

#include "curator/common/errors.hpp"
#include "curator/common/image_io.hpp"

#include <sstream>

namespace curator::catalog {

std::vector<Annotation> parse_annotations(std::string_view text) {
  std::vector<Annotation> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
      continue;
    }
    std::istringstream fields(line);
    Annotation a;
    std::string extra;
    if (!(fields >> a.class_name >> a.box.x_min >> a.box.y_min >> a.box.x_max >> a.box.y_max) ||
        (fields >> extra)) {
      throw ValidationError("annotation line " + std::to_string(number) +
                            ": expected 'class x_min y_min x_max y_max'");
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Annotation> read_annotations(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return parse_annotations(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string format_annotations(const std::vector<Annotation>& annotations) {
  std::ostringstream out;
  for (const auto& a : annotations) {
    out << a.class_name << ' ' << a.box.x_min << ' ' << a.box.y_min << ' ' << a.box.x_max << ' '
        << a.box.y_max << '\n';
  }
  return out.str();
}

}  // namespace curator::catalog
