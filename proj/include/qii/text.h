#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qii {

// Trims the ends and collapses internal whitespace runs to one space.
std::string normalize_name(std::string_view name);

// Comparison key for attribute, group and domain names: the normalized
// name folded to lower case.
std::string name_key(std::string_view name);

// name_key with all whitespace removed; used as a fallback when a name
// had to be written without spaces (query tokens such as "LeaveDate").
std::string compact_key(std::string_view name);

bool names_equal(std::string_view a, std::string_view b);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string> &parts, std::string_view sep);

std::string read_file(const std::string &path);

}  // namespace qii
