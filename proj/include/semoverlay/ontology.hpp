#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "semoverlay/rdf.hpp"

namespace semo {

enum class ClassLevel { Upper, Lower };
enum class PropertyKind { ObjectProperty, DatatypeProperty };

struct PropertySpec {
    PropertyKind kind = PropertyKind::ObjectProperty;
    std::set<std::string> domains;
    std::set<std::string> ranges;
};

// Semantic clusters are named after upper-ontology leaf classes; ordered set
// keeps iteration deterministic. kDefaultCluster catches data whose formula
// yields nothing.
using ClusterSet = std::set<std::string>;

inline const std::string kDefaultCluster = "__default";

// Two-level class hierarchy: a shared upper ontology whose leaf classes act
// as semantic clusters, with peer-defined lower classes hanging beneath it.
struct Ontology {
    std::set<std::string> classes;
    std::map<std::string, std::string> parent;  // absent key = root
    std::map<std::string, ClassLevel> level;
    std::map<std::string, PropertySpec> properties;
    std::map<std::string, std::string> instance_class;  // instance iri -> class

    bool has_class(const std::string& name) const { return classes.count(name) > 0; }
    bool is_upper(const std::string& name) const {
        auto it = level.find(name);
        return it != level.end() && it->second == ClassLevel::Upper;
    }

    // Resolves the class a term denotes: asserted instance class first, then
    // a class named by the iri's local name, then by its full text.
    std::optional<std::string> class_of_term(const Term& t) const;

    // Checks all structural invariants; throws ValidationError.
    void validate() const;
};

// Loads the JSON ontology document (keys: classes, properties, instances).
// Throws ParseError on malformed documents, ValidationError on bad structure.
Ontology load_ontology(const std::string& json_text);
Ontology load_ontology_file(const std::string& path);

// Upper-ontology classes with no upper-level child, in name order.
ClusterSet leaf_clusters(const Ontology& o);

// The unique upper leaf whose subtree contains the term's class, or empty for
// literals and unknown iris.
ClusterSet clusters_of_term(const Ontology& o, const Term& t);

// ObjectProperty: leaves covering each range class. DatatypeProperty: leaves
// covering each domain class. Throws UnknownProperty.
ClusterSet clusters_of_predicate(const Ontology& o, const Term& p);

// The clustering formula: predicate-set ∩ object-set for ObjectProperty,
// subject-set ∩ predicate-set for DatatypeProperty. Empty intersection falls
// back to the union, then to {__default}.
ClusterSet clusters_of_triple(const Ontology& o, const Triple& t);

// Same formula over a pattern; a variable subject/object contributes the
// universal set. Throws UnsupportedPattern for variable predicates.
ClusterSet clusters_of_pattern(const Ontology& o, const TriplePattern& q);

}  // namespace semo
