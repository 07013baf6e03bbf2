#pragma once

#include <string>
#include <vector>

namespace kgqa {

// Which retrieval shape a template instantiates. Families 1:1 with the
// answer computation paths in qagen.
enum class Family {
    PositionsOfPerson,    // person(s) -> positions
    OrgOfPerson,          // person -> employer
    PersonsOfOrg,         // org -> representatives
    RolesOfOrg,           // org(s) -> role classes
    OrgsOfRole,           // role class(es) -> companies
    LocationsOfOrg,       // org -> locations
    OrgOfLocation,        // location -> company
    TypesOfLocation,      // location -> location types
    RolesOfOrgOfPerson,   // person -> employer -> roles
    RolesOfOrgOfLocation, // location -> company -> roles
    PersonsByCompany,     // company selector -> persons holding position(s)
    LocationByCompany,    // company selector -> typed office address
};

// How a PersonsByCompany / LocationByCompany template picks its company.
enum class Selector {
    None,
    Org,          // the company is named in the question
    Location,     // "the company associated with [Location]"
    LocationDiff, // as Location, but the answer must differ from the anchor
    Employee,     // "the company where [Person Name] is employed"
    RoleCombo,    // the company's full role combination names it
    RolePair,     // two role slots combined by the set expression
};

// Where the template's set expression applies.
enum class SetSite {
    None,
    Anchors,   // over the same-kind anchor slots
    Positions, // over position slots within the selected company
    SelectorRoles,
};

// Intersection of positive base sets minus the union of negative base sets.
// Indices refer to the set-site slot group.
struct SetExprSpec {
    std::vector<int> positive;
    std::vector<int> negative;

    bool empty() const { return positive.empty() && negative.empty(); }
    // Set-operation count: operands beyond the first, plus one when any
    // exclusion is present.
    int so_count() const {
        if (empty())
            return 0;
        int operands = static_cast<int>(positive.size() + negative.size());
        return (operands - 1) + (negative.empty() ? 0 : 1);
    }
};

struct SlotSpec {
    std::string name; // the bracketed placeholder as it appears in `pattern`
    std::string role; // anchor|org|position|role|role_combo|location|location_diff|employee|location_type
};

struct TemplateSpec {
    std::string template_id;
    std::string pattern; // question text with [Slot] placeholders
    int plurality = 0;   // P
    int hops = 0;        // H
    int set_ops = 0;     // #SO
    Family family = Family::PositionsOfPerson;
    Selector selector = Selector::None;
    SetSite set_site = SetSite::None;
    SetExprSpec set_expr;
    std::vector<SlotSpec> slots;
    std::vector<std::string> hop_path; // label kind chain, audit field
    bool if_one = false;               // "[if one]" marker from the catalog
    bool unique_company = false;       // company must be uniquely identifiable

    int level() const { return plurality + hops + set_ops; }
};

// Default catalog location under the repository data directory.
std::string default_catalog_path();

// Loads and validates the catalog data file. Throws ConfigError on missing
// files and SchemaError on malformed entries (unknown family/selector,
// placeholder missing from the pattern, set-op count mismatch, level out of
// [1,5]).
std::vector<TemplateSpec> load_catalog(const std::string& path = default_catalog_path());

} // namespace kgqa
