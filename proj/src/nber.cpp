#include "techland/nber.hpp"

#include <charconv>

namespace techland::nber {

std::optional<int> parse_subcategory(std::string_view label) {
    int code = 0;
    auto res = std::from_chars(label.data(), label.data() + label.size(), code);
    if (res.ec == std::errc() && res.ptr == label.data() + label.size()) {
        if (subcategory_index(code)) {
            return code;
        }
        return std::nullopt;
    }
    for (const auto& sub : kSubcategories) {
        if (sub.name == label) {
            return sub.code;
        }
    }
    return std::nullopt;
}

} // namespace techland::nber
