#pragma once

#include "kgqa/kg.hpp"
#include "kgqa/templates.hpp"

#include <map>
#include <string>
#include <vector>

namespace kgqa {

// One filled slot. A role-combo slot binds several class nodes; everything
// else binds exactly one.
struct BoundSlot {
    std::string slot;                // placeholder name from the pattern
    std::string kind;                // person|org|role|position|location|location_type|role_combo
    std::vector<Iri> nodes;          // graph nodes behind the slot
    std::vector<std::string> labels; // surface label per node
    std::string surface;             // rendered replacement text
};

using Binding = std::vector<BoundSlot>; // aligned with TemplateSpec::slots

struct QAPair {
    std::string qa_id;
    std::string doc_id;
    std::string template_id;
    std::string question;
    std::vector<std::string> answers; // canonical case-insensitive order
    int p = 0, h = 0, so = 0, l = 0;
    std::string bucket;      // Easy | Medium | Hard
    std::string answer_kind; // person|org|role|position|location|location_type
    Binding bindings;
};

std::string bucket_for_level(int level);

// All slot tuples the template can bind in the graph, deterministically
// ordered. Candidate entities are harvested with compiled query-engine
// queries over the hop path; tuple assembly and operand canonicalization
// (symmetric positives sorted, duplicates removed) happen here.
std::vector<Binding> enumerate_bindings(const TemplateSpec& t, const KnowledgeGraph& g);

// Base sets by hop traversal, then the set expression (intersection of
// positives minus union of negatives). Surface labels in canonical order.
std::vector<std::string> answer_set(const TemplateSpec& t, const Binding& binding,
                                    const KnowledgeGraph& g);

// Bindings whose answer set passes applicability (exactly one answer for
// P=0, at least two for P=1, company uniqueness where required) become
// QAPairs, ordered by template then sorted binding.
std::vector<QAPair> instantiate(const TemplateSpec& t, const KnowledgeGraph& g,
                                const std::string& doc_id);

// Full catalog over one document graph.
std::vector<QAPair> instantiate_all(const std::vector<TemplateSpec>& catalog,
                                    const KnowledgeGraph& g, const std::string& doc_id);

// JSONL round-trip for QA files (one pair per line).
std::string qa_to_jsonl_line(const QAPair& qa);
QAPair qa_from_jsonl_line(const std::string& line);
std::vector<QAPair> read_qa_jsonl(const std::string& path);
void write_qa_jsonl(const std::string& path, const std::vector<QAPair>& pairs);

// Counts per bucket and per (P,H,SO) cell.
struct BucketSummary {
    std::map<std::string, int> per_bucket;
    std::map<std::string, int> per_cell; // key "P,H,SO"
    int total = 0;

    std::string to_string() const;
};

BucketSummary bucketize(const std::vector<QAPair>& pairs);

// Partition by document membership. Throws ReferenceError when a dev doc id
// is unknown to the pair set.
std::pair<std::vector<QAPair>, std::vector<QAPair>>
split_dataset(const std::vector<QAPair>& pairs, const std::vector<std::string>& dev_doc_ids);

} // namespace kgqa
