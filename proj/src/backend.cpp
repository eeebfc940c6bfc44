#include "econ/backend.hpp"

#include <exception>
#include <sstream>

namespace econ {

std::vector<std::string> SplitLexemes(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string lex;
  while (in >> lex) out.push_back(std::move(lex));
  return out;
}

Attempt RunAttempt(const AttemptSpec& spec, const Prover& prover, const Verifier& verifier,
                   std::vector<std::string>* messages, std::string* error) {
  Attempt attempt;
  attempt.problem_id = spec.problem->id;
  attempt.mode = spec.mode.value_or(Mode::kNonCot);
  attempt.head_id = spec.head_id;
  attempt.prefix_id = spec.prefix_id;
  attempt.pass_index = spec.seed_path.pass_index;
  attempt.seed_path = spec.seed_path;
  attempt.verdict = Verdict::kUnverified;

  ProverRequest request;
  request.problem_id = spec.problem->id;
  request.statement = spec.problem->statement;
  request.mode_hint = spec.mode;
  request.prefix_id = spec.prefix_id;
  request.max_tokens = spec.max_tokens;
  request.seed = spec.seed_path.Seed();
  request.prompt_template_id = spec.prompt_template_id;

  ProveResponse response;
  try {
    response = prover.Prove(request);
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return attempt;
  }
  attempt.initial_tokens = response.token_count;
  if (response.mode) attempt.mode = *response.mode;
  attempt.token_stream = response.tokens ? *response.tokens : SplitLexemes(response.text);
  attempt.proof_text = response.text;

  try {
    VerifierReport report = verifier.Verify(VerifyRequest{spec.problem->statement, response.text});
    attempt.verdict = report.verdict;
    if (messages) *messages = std::move(report.messages);
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    attempt.verdict = Verdict::kUnverified;
  }
  return attempt;
}

}  // namespace econ
