#pragma once

// Prompt texts for the HTTP provider. Placeholders are substituted with
// ReplaceAll before sending.

namespace dgrag::prompts {

inline constexpr const char* kExtract = R"(-Goal-
Identify all entities (persons, places, events, objects, concepts) in the text and all relationships between them.

Return only a JSON object:
{"entities": [{"name": "...", "type": "person|place|event|object|other", "description": "..."}],
 "relations": [{"src": "...", "dst": "...", "description": "...", "keywords": ["..."]}]}

Every relation endpoint must be the name of an entity you listed.

-Text-
{text})";

inline constexpr const char* kSummarize = R"(You are given a subgraph of a knowledge graph as plain text: one line per entity "name (type): description", then one line per relationship "src — dst: description".

Write a concise summary (at most 150 words) that captures the subject areas, the main entities and the key relationships. Do not copy long passages.

-Subgraph-
{text})";

inline constexpr const char* kKeywords = R"(Extract keywords from the query.
low_level_keywords: specific entities, names, or concrete terms.
high_level_keywords: overarching concepts or themes.
Return only a JSON object: {"low_level_keywords": ["..."], "high_level_keywords": ["..."]}

Query: {query})";

inline constexpr const char* kAnswerSystem = R"(You are a helpful assistant answering questions using the data tables below.
If the data do not contain enough information, answer exactly: "Insufficient information. I don't know."
Do not make anything up.

{context})";

inline constexpr const char* kConfidence = R"(Below are several candidate answers to the same question. Does any of them express a lack of confidence or information, for example "insufficient information" or "need more details"?
Answer with a single word: yes or no.

{candidates})";

inline constexpr const char* kClaimConsistency = R"(Below are several candidate answers to the same question. Rate how consistent their core claims are with each other, from 0 (contradictory or unrelated) to 1 (the same claims).
Answer with a single number between 0 and 1.

{candidates})";

inline constexpr const char* kPairwiseJudge = R"(---Role---
You are an expert tasked with evaluating two answers to the same question based on three criteria: Comprehensiveness, Diversity, and Empowerment.
---Goal---
- Comprehensiveness: How much detail does the answer provide to cover all aspects and details of the question?
- Diversity: How varied and rich is the answer in providing different perspectives and insights on the question?
- Empowerment: How well does the answer help the reader understand and make informed judgments about the topic?
For each criterion, choose the better answer (either Answer 1 or Answer 2) and explain why. Then select an overall winner based on these three categories.

Question: {query}

Answer 1: {answer_a}

Answer 2: {answer_b}

Output your evaluation only as JSON:
{"Comprehensiveness": {"Winner": "Answer 1 or Answer 2", "Explanation": "..."},
 "Diversity": {"Winner": "...", "Explanation": "..."},
 "Empowerment": {"Winner": "...", "Explanation": "..."},
 "Overall": {"Winner": "...", "Explanation": "..."}})";

}  // namespace dgrag::prompts
