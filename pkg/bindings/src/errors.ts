/** Exception types raised at the binding boundary and mapped from engine exit codes. */

/** Base class for every error this package throws. */
export class StpruneError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Array shape/length disagreement caught before the engine is invoked. */
export class ShapeError extends StpruneError {}

/** A parameter lies outside its legal range; caught before the engine is invoked. */
export class DomainError extends StpruneError {}

/** Engine exit 2: the serialized dump was rejected as malformed. */
export class MalformedDumpError extends StpruneError {}

/** Engine exit 3: conflicting budget/ratio options. */
export class FlagConflictError extends StpruneError {}

/** Engine exit 4: frames disagree on feature width. */
export class DimensionMismatchError extends StpruneError {}

/** The engine could not be run, or exited with an unknown code. */
export class EngineError extends StpruneError {}
