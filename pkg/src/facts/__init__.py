from .facts import (
    DISTRACTING,
    FACTS_PREFIX,
    SUPPORTING,
    TEMPLATES,
    DistractorPoolExhausted,
    Fact,
    FactList,
    FactParseError,
    as_fraction,
    compile_supporting_facts,
    inject_noise,
    parse_facts,
    shuffle_facts,
    world_from_facts,
)
