class LemmaViolation(AssertionError):
    """An identity or bound that must hold on a valid net did not."""

    def __init__(self, lemma: str, detail: str):
        self.lemma = lemma
        self.detail = detail
        super().__init__(f"lemma {lemma} violated: {detail}")
