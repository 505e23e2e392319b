#ifndef TECHLAND_NBER_HPP
#define TECHLAND_NBER_HPP

#include <array>
#include <optional>
#include <string_view>

namespace techland::nber {

struct Subcategory {
    int code;               // two-digit NBER subcategory code; first digit is the category
    std::string_view name;
};

struct Category {
    int code;
    std::string_view name;
};

inline constexpr std::array<Category, 6> kCategories{{
    {1, "Chemical"},
    {2, "Computers & Communications"},
    {3, "Drugs & Medical"},
    {4, "Electrical & Electronic"},
    {5, "Mechanical"},
    {6, "Others"},
}};

// NBER patent data project classification, including subcategory 25 from the 2006 update.
inline constexpr std::array<Subcategory, 37> kSubcategories{{
    {11, "Agriculture, Food, Textiles"},
    {12, "Coating"},
    {13, "Gas"},
    {14, "Organic Compounds"},
    {15, "Resins"},
    {19, "Miscellaneous-Chemical"},
    {21, "Communications"},
    {22, "Computer Hardware & Software"},
    {23, "Computer Peripherals"},
    {24, "Information Storage"},
    {25, "Electronic Business Methods & Software"},
    {31, "Drugs"},
    {32, "Surgery & Medical Instruments"},
    {33, "Biotechnology"},
    {39, "Miscellaneous-Drugs & Medical"},
    {41, "Electrical Devices"},
    {42, "Electrical Lighting"},
    {43, "Measuring & Testing"},
    {44, "Nuclear & X-rays"},
    {45, "Power Systems"},
    {46, "Semiconductor Devices"},
    {49, "Miscellaneous-Electrical"},
    {51, "Materials Processing & Handling"},
    {52, "Metal Working"},
    {53, "Motors, Engines & Parts"},
    {54, "Optics"},
    {55, "Transportation"},
    {59, "Miscellaneous-Mechanical"},
    {61, "Agriculture, Husbandry, Food"},
    {62, "Amusement Devices"},
    {63, "Apparel & Textile"},
    {64, "Earth Working & Wells"},
    {65, "Furniture, House Fixtures"},
    {66, "Heating"},
    {67, "Pipes & Joints"},
    {68, "Receptacles"},
    {69, "Miscellaneous-Others"},
}};

/// Row index of a subcategory code in kSubcategories, if known.
constexpr std::optional<std::size_t> subcategory_index(int code) {
    for (std::size_t i = 0; i < kSubcategories.size(); ++i) {
        if (kSubcategories[i].code == code) {
            return i;
        }
    }
    return std::nullopt;
}

/// Accepts a numeric code ("22") or an exact subcategory name.
std::optional<int> parse_subcategory(std::string_view label);

constexpr int category_of(int subcategory_code) { return subcategory_code / 10; }

} // namespace techland::nber

#endif // TECHLAND_NBER_HPP
