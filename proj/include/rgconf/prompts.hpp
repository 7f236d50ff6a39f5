#pragma once

// Prompt templates for chain generation, step-equivalence judging, and
// self-reflection. The built-in texts match the assets shipped under
// assets/prompts/; a PromptSet can override any of them from a directory.
//
// The generation template carries an {exemplars} slot for user-supplied
// few-shot examples; it renders empty by default.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rgconf/chains.hpp"
#include "rgconf/common.hpp"

namespace rgconf {

// Bump when a template changes; judged-equivalence cache keys include this.
inline constexpr const char* kGenerationPromptVersion = "gen-v1";
inline constexpr const char* kEquivalencePromptVersion = "equiv-v1";
inline constexpr const char* kReflectionPromptVersion = "reflect-v1";

inline constexpr const char* kGenerationTemplate =
    R"({exemplars}Answer the following question. Break down your reasoning process into the smallest possible steps. Each step should represent a single, minimal reasoning action, and each step must logically follow the previous one. Use the following format for each step:

Step N:
Thought: [Provide a detailed explanation of your reasoning for this step.]

Present your entire reasoning process in one cohesive response.

After completing all the steps, conclude with:

Final Answer: \boxed{[Your final numerical answer here without the unit or any additional text]}

Ensure that your response strictly follows this format to maintain clarity and consistency.

Question: {question}
)";

inline constexpr const char* kEquivalenceTemplate =
    R"(You are tasked with identifying the equivalent reasoning step in Path B for a specific reasoning step in Path A.

Context:
Path A and Path B are sequences of reasoning steps.

Inputs:

Target Step: {target_step}

Steps in Path B: {candidate_steps}

Your Task:
Identify the single step number in Path B that is equivalent to the given step in Path A. The equivalent step must:
- Contain the same reasoning as the given step in Path A.
- Not contain additional or conflicting information.

If no such step exists, respond with "none".

Output Format:
Provide only the step number (e.g., "5") or "none".
)";

inline constexpr const char* kReflectionTemplate =
    R"(Question: {question}

Previous Answer: {previous_answer}

Please review your previous answer. Identify any errors or flaws, and revise your answer if necessary. For you final answer, output it in the following format:

Final Answer: \boxed{[Your corrected final answer here]}
)";

struct PromptSet {
    std::string generation = kGenerationTemplate;
    std::string equivalence = kEquivalenceTemplate;
    std::string reflection = kReflectionTemplate;

    // Override templates from <dir>/{generation,equivalence,reflection}.txt.
    // Missing files keep the built-in text.
    static PromptSet from_directory(const std::string& dir) {
        PromptSet set;
        auto load = [&](const char* name, std::string& slot) {
            std::ifstream in(dir + "/" + name);
            if (!in) return;
            std::ostringstream buf;
            buf << in.rdbuf();
            slot = buf.str();
        };
        load("generation.txt", set.generation);
        load("equivalence.txt", set.equivalence);
        load("reflection.txt", set.reflection);
        return set;
    }

    std::string render_generation(const std::string& question, const std::string& exemplars = "") const {
        std::string out = generation;
        replace_all(out, "{exemplars}", exemplars.empty() ? "" : exemplars + "\n\n");
        replace_all(out, "{question}", question);
        return out;
    }

    // Candidates render as a numbered list so the judge can reply with the
    // step number.
    std::string render_equivalence(const Step& target, const std::vector<Step>& candidates) const {
        std::ostringstream list;
        for (size_t i = 0; i < candidates.size(); ++i) {
            list << "\n" << (i + 1) << ". " << trim(candidates[i].text);
        }
        std::string out = equivalence;
        replace_all(out, "{target_step}", trim(target.text));
        replace_all(out, "{candidate_steps}", list.str());
        return out;
    }

    std::string render_reflection(const std::string& question, const std::string& previous_answer) const {
        std::string out = reflection;
        replace_all(out, "{question}", question);
        replace_all(out, "{previous_answer}", previous_answer);
        return out;
    }
};

}  // namespace rgconf
