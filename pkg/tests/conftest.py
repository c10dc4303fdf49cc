from hypothesis import settings

settings.register_profile("coarserank", deadline=None, max_examples=150)
settings.load_profile("coarserank")
