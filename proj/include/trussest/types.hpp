#pragma once

#include <string>
#include <string_view>

namespace trussest {

enum class Axis { X = 0, Y = 1, Z = 2 };

enum class ElementClass { Bracing, ActiveColumn, PassiveColumn };

inline bool is_column(ElementClass c) { return c != ElementClass::Bracing; }

char axis_char(Axis a);
Axis parse_axis(std::string_view s);

std::string to_string(ElementClass c);
ElementClass parse_element_class(std::string_view s);

}  // namespace trussest
