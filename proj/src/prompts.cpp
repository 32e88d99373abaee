#include "masuq/topology.hpp"

namespace masuq {
namespace {

const char* const kFeedbackNote =
    " Your input may include feedback from the Orchestrator from the previous round.";

AgentSpec worker(const std::string& name, const std::string& role, const std::string& ask) {
  return AgentSpec{name, {"You are the " + name + ". " + role + kFeedbackNote,
                          "Question: {question} " + ask +
                              " Place the final answer in \\boxed{}.{context_block}"}};
}

OrchestratorSpec orchestrator() {
  return OrchestratorSpec{
      "OrchestratorAgent",
      {"You are the Orchestrator Agent. Your task is to review the solutions provided by the "
       "first-layer agents in the current round. Analyze the provided solutions, identify any "
       "issues or areas for improvement, and provide constructive feedback. You may rewrite "
       "content, provide specific feedback, and offer improvement suggestions as needed. Your "
       "feedback will be used by the agents in the next round to improve their solutions.",
       "Question: {question} Here are the solutions from the expert agents in the current round: "
       "=== Solutions ===\n{solutions_block}\n=== Solutions === Review these solutions and provide "
       "feedback for the next round. If corrections are needed, specify the issues and suggest "
       "improvements. If the solutions are satisfactory, acknowledge them and provide guidance for "
       "further refinement."},
      {"You are the Orchestrator Agent. Your task is to aggregate the solutions provided by the "
       "first-layer agents and produce a final answer wrapped in \\boxed{}.",
       "Question: {question} Here are the solutions from the expert agents: === Solutions ===\n"
       "{solutions_block}\n=== Solutions === Based on these inputs, provide the final answer "
       "wrapped in \\boxed{}."}};
}

std::vector<AgentSpec> experts() {
  return {worker("MathAgent", "Solve the given question with clear steps.",
                 "Provide a concise mathematical solution, showing key steps."),
          worker("ScienceAgent", "Analyze and solve the given question with scientific reasoning.",
                 "Explain your scientific reasoning and provide a final result."),
          worker("CodeAgent", "Provide a self-contained Python function that solves the problem.",
                 "Write a single self-contained Python function in a markdown code block that "
                 "solves the problem.")};
}

}  // namespace

ArchitectureSpec default_spec(Architecture kind) {
  ArchitectureSpec spec;
  spec.kind = kind;
  switch (kind) {
    case Architecture::single:
      spec.roster = {{"SingleSolver",
                      {"You are the SingleSolver agent. Solve the question step by step. When "
                       "your earlier attempts are shown, check them and refine the answer.",
                       "Question: {question} Reason step by step and place the final answer in "
                       "\\boxed{}.{context_block}"}}};
      spec.decision = DecisionRule::last_round_output;
      break;
    case Architecture::sequential:
      spec.roster = {
          {"Planner",
           {"You are the planner agent. Generate plans that are the general instructions only. Do "
            "not execute the plan, do not perform any calculations, and do not produce any answers "
            "or intermediate numerical results. Output a structured, numbered plans.",
            "For the question: {question}\nPlease only generate plans that are guidances required "
            "for the subsequent reasoning for the problem-solving. Do not include any specific "
            "calculation or numerical results. Your input may include previous round outputs "
            "content. You can consider the given contents as the initial state of the "
            "problem-solving.{context_block}"}},
          {"Solver",
           {"You are the solver agent. Solve strictly according to the provided plans. Execute "
            "each step precisely and produce the final result. Output the final result into "
            "\\boxed{}.",
            "Question: {question}\n### Plans ###\n{solutions_block}\n### Plans ###\nFollow the "
            "plans to solve the question step by step and place the final answer in \\boxed{}."}},
          {"Critic",
           {"You are the critic agent. Review the solver's solution in detail, re-derive "
            "independently, and correct any mistakes. Keep the review terse.",
            "Review the solution for: {question}\n### Solution ###\n{solutions_block}\n### "
            "Solution ###\nIf corrections are needed, output the mistaken steps and the analysis, "
            "otherwise output 'Correct'."}},
          {"Judger",
           {"You are the final judge. Audit only the final candidate and ensure it is correct.",
            "Final check for: {question}\n### Solution ###\n{solutions_block}\n### Solution ###\n"
            "If correct, only output the final answer without words, labels, and steps, and "
            "wrapped in \\boxed{}."}}};
      spec.decision = DecisionRule::judger_output;
      break;
    case Architecture::centralized:
      spec.roster = experts();
      spec.orchestrator = orchestrator();
      spec.decision = DecisionRule::orchestrator_output;
      break;
    case Architecture::debate:
      for (int k = 1; k <= 3; ++k) {
        const std::string name = "Agent" + std::to_string(k);
        spec.roster.push_back(
            {name,
             {"You are " + name + " in a debate among three solvers. Solve the question "
                 "independently, weigh the other agents' answers shown to you, and defend or revise "
                 "your own.",
              "Question: {question} Give your reasoning and place the final answer in "
              "\\boxed{}.{context_block}"}});
      }
      spec.decision = DecisionRule::majority_vote;
      break;
    case Architecture::hybrid:
      spec.roster = experts();
      for (auto& a : spec.roster) {
        a.prompt.system += " You may also see the current and previous outputs of your peers.";
      }
      spec.orchestrator = orchestrator();
      spec.decision = DecisionRule::orchestrator_output;
      break;
  }
  return spec;
}

}  // namespace masuq
