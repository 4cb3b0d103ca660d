from .store import (
    CritiqueRecord,
    CritiqueStore,
    MemoryError,
    MemorySummary,
    load_store,
    summarize_memory,
)
from .skills import (
    DEFAULT_SKILLS,
    SkillDescriptor,
    SkillLibrary,
    SkillLibraryError,
    SkillNotLearned,
    UnknownSkill,
    default_library,
    load_library,
)

__all__ = [
    "CritiqueRecord",
    "CritiqueStore",
    "DEFAULT_SKILLS",
    "MemoryError",
    "MemorySummary",
    "SkillDescriptor",
    "SkillLibrary",
    "SkillLibraryError",
    "SkillNotLearned",
    "UnknownSkill",
    "default_library",
    "load_library",
    "load_store",
    "summarize_memory",
]
