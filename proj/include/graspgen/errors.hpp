#pragma once

#include <stdexcept>
#include <string>

namespace grasp {

struct ParseError : std::runtime_error {
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        line_number(line) {}
  std::size_t line_number;
};

struct EmptyMesh : std::runtime_error {
  explicit EmptyMesh(const std::string& file)
      : std::runtime_error("mesh has no triangles: " + file) {}
};

struct NonFiniteVertex : std::runtime_error {
  NonFiniteVertex(const std::string& file, std::size_t line)
      : std::runtime_error(file + ":" + std::to_string(line) + ": non-finite vertex") {}
};

struct NotWatertight : std::runtime_error {
  NotWatertight() : std::runtime_error("mesh is not watertight") {}
};

struct NonPositiveStiffness : std::runtime_error {
  NonPositiveStiffness() : std::runtime_error("spring stiffness must be positive") {}
};

struct NonPositiveMass : std::runtime_error {
  NonPositiveMass() : std::runtime_error("mass must be positive") {}
};

struct EmptyRecordSet : std::runtime_error {
  EmptyRecordSet() : std::runtime_error("calibration record set is empty") {}
};

struct PlacementFailed : std::runtime_error {
  explicit PlacementFailed(int object_index)
      : std::runtime_error("scene placement failed for object " +
                           std::to_string(object_index) + " after max retries") {}
};

// Invalid values or unknown keys in a JSON/CSV input. `pointer` is a JSON
// pointer (or row reference for CSV) naming the offending element.
struct SchemaError : std::runtime_error {
  SchemaError(const std::string& pointer, const std::string& what)
      : std::runtime_error(pointer + ": " + what), json_pointer(pointer) {}
  std::string json_pointer;
};

}  // namespace grasp
