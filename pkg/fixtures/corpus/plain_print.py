print("hello from the guest")
